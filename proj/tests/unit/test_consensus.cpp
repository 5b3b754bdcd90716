#include <gtest/gtest.h>

#include <atomic>
#include <deque>

#include "drsr/consensus.hpp"
#include "drsr/dataset.hpp"
#include "drsr/errors.hpp"
#include "drsr/subspace.hpp"
#include "generators.hpp"
#include "oracles.hpp"

namespace drsr {
namespace {

using testing::Rng;

template <class Value>
class RecordingMonitor : public ConsensusMonitor<Value> {
 public:
  struct Snapshot {
    int s;
    std::vector<BasicNodeState<Value>> nodes;
    std::vector<double> objectives;
  };
  void restarted(double step) override {
    restarts.push_back(step);
    snapshots.clear();
  }
  void superstep(int s, const std::vector<BasicNodeState<Value>>& nodes,
                 const std::vector<double>& objectives) override {
    snapshots.push_back({s, nodes, objectives});
  }
  std::vector<Snapshot> snapshots;
  std::vector<double> restarts;
};

std::vector<LocalDataset> synthetic_blocks(int nodes, int dim, int d, int inliers, int outliers,
                                           double sigma, std::uint64_t seed, Subspace* truth = nullptr) {
  SyntheticConfig cfg;
  cfg.nodes = nodes;
  cfg.ambient_dim = dim;
  cfg.subspace_dim = d;
  cfg.inliers = inliers;
  cfg.outliers = outliers;
  cfg.sigma = sigma;
  cfg.seed = seed;
  SyntheticData synth = generate_synthetic(cfg);
  if (truth != nullptr) *truth = synth.truth;
  return to_local_datasets(synth.data);
}

Matrix pooled(const std::vector<LocalDataset>& blocks) {
  Eigen::Index rows = 0;
  for (const auto& b : blocks) rows += b.size();
  Matrix out(rows, blocks.front().dim());
  Eigen::Index at = 0;
  for (const auto& b : blocks) {
    out.middleRows(at, b.size()) = b.points();
    at += b.size();
  }
  return out;
}

ConsensusConfig config(double step, int t_outer) {
  ConsensusConfig cfg;
  cfg.step_size = step;
  cfg.t_outer = t_outer;
  return cfg;
}

TEST(ConsensusConfig, Validation) {
  EXPECT_THROW(validate(config(0.0, 10)), ConfigError);
  EXPECT_THROW(validate(config(1.0, 0)), ConfigError);
  ConsensusConfig cfg = config(1.0, 1);
  cfg.record_every = 0;
  EXPECT_THROW(validate(cfg), ConfigError);
  cfg.record_every = 1;
  cfg.compression_top_d = 0;
  EXPECT_THROW(validate(cfg), ConfigError);
}

TEST(PracticalStepSize, HandEvaluationOnScalars) {
  const std::vector<LocalDataset> data = {LocalDataset(Matrix::Ones(1, 1)),
                                          LocalDataset(Matrix::Ones(1, 1))};
  const NetworkGraph g(2, {{1, 2}});
  EXPECT_DOUBLE_EQ(practical_step_size(data, g, 1, 1e-10), 1.0);
  EXPECT_DOUBLE_EQ(practical_step_size(data, g, 4, 1e-10, StepSizeMode::kConservative), 0.25);
}

TEST(PracticalStepSize, ScalesWithDimensionSquared) {
  Rng rng(1);
  std::vector<LocalDataset> data;
  for (int k = 0; k < 3; ++k) data.emplace_back(testing::gaussian_matrix(rng, 20, 4));
  const NetworkGraph g(3, {{1, 2}, {2, 3}});
  const double conservative = practical_step_size(data, g, 1, 1e-10, StepSizeMode::kConservative);
  EXPECT_NEAR(practical_step_size(data, g, 1, 1e-10), 16.0 * conservative, 1e-12 * conservative);
}

TEST(PracticalStepSize, Errors) {
  const std::vector<LocalDataset> one = {LocalDataset(Matrix::Ones(1, 1))};
  EXPECT_THROW(practical_step_size(one, NetworkGraph(1, {}), 1, 1e-10), ConfigError);
}

TEST(CbgaUpdateDual, UnchangedWhenNeighborsAgree) {
  const NetworkGraph g(3, {{1, 2}, {2, 3}});
  Rng rng(2);
  const SymMatrix q = testing::random_trace_one_pd(rng, 4);
  const NodeState state{2, q, testing::random_traceless(rng, 4)};
  const SymMatrix dual = cbga_update_dual(g, state, {{1, q}, {3, q}}, 10.0);
  EXPECT_EQ(dual.matrix(), state.dual.matrix());
}

TEST(CbgaUpdateDual, AntisymmetricOnTwoNodes) {
  const NetworkGraph g(2, {{1, 2}});
  Rng rng(3);
  const SymMatrix q1 = testing::random_trace_one_pd(rng, 3);
  const SymMatrix q2 = testing::random_trace_one_pd(rng, 3);
  const SymMatrix zero = SymMatrix::zero(3);
  const SymMatrix a1 = cbga_update_dual(g, {1, q1, zero}, {{2, q2}}, 7.0);
  const SymMatrix a2 = cbga_update_dual(g, {2, q2, zero}, {{1, q1}}, 7.0);
  EXPECT_LE((a1.matrix() - 7.0 * (q1 - q2).matrix()).norm(), 1e-14);
  EXPECT_LE((a1 + a2).frobenius_norm(), 1e-14);
  EXPECT_NEAR(a1.trace(), 0.0, 1e-14);
}

TEST(CbgaUpdateDual, MatchesEdgeMultiplierBookkeepingOnPath) {
  const NetworkGraph g(3, {{1, 2}, {2, 3}});
  const std::vector<std::pair<int, int>> edges = {{1, 2}, {2, 3}};
  Rng rng(4);
  std::vector<Matrix> lambdas(2, Matrix::Zero(4, 4));
  std::vector<SymMatrix> duals(3, SymMatrix::zero(4));
  const double mu = 3.5;
  for (int step = 0; step < 5; ++step) {
    std::vector<SymMatrix> qs;
    std::vector<Matrix> raw;
    for (int k = 0; k < 3; ++k) {
      qs.push_back(testing::random_trace_one_pd(rng, 4));
      raw.push_back(qs.back().matrix());
    }
    const std::vector<Matrix> expected = oracle::dual_aggregates_via_edges(3, edges, lambdas, raw, mu);
    for (int k = 1; k <= 3; ++k) {
      std::map<int, SymMatrix> messages;
      for (int q : g.neighbors(k)) messages.emplace(q, qs[q - 1]);
      duals[k - 1] = cbga_update_dual(g, {k, qs[k - 1], duals[k - 1]}, messages, mu);
      EXPECT_LE((duals[k - 1].matrix() - expected[k - 1]).norm(), 1e-12);
    }
  }
}

TEST(CbgaUpdateDual, MissingOrExtraMessagesAreProtocolErrors) {
  const NetworkGraph g(3, {{1, 2}, {2, 3}});
  const SymMatrix q = SymMatrix::identity(2) * 0.5;
  const NodeState state{2, q, SymMatrix::zero(2)};
  EXPECT_THROW(cbga_update_dual(g, state, {{1, q}}, 1.0), ProtocolError);
  EXPECT_THROW(cbga_update_dual(g, state, {{1, q}, {4, q}}, 1.0), ProtocolError);
}

TEST(CbgaRun, SingleNodeSolvesOnceAndMatchesLocalSolve) {
  Rng rng(5);
  const LocalDataset data(testing::gaussian_matrix(rng, 30, 5));
  std::atomic<int> calls = 0;
  const LocalSolveFn<SymMatrix> solve = [&](int, const SymMatrix& a, const SymMatrix*) {
    ++calls;
    EXPECT_EQ(a.frobenius_norm(), 0.0);
    GmsReport r = gms_local_solve(data, a, GmsParams{});
    return LocalSolution<SymMatrix>{r.q, r.objective_history.back()};
  };
  const auto result = cbga_run(solve, SymMatrix::zero(5), NetworkGraph(1, {}), config(10.0, 250));
  EXPECT_EQ(calls.load(), 1);
  EXPECT_EQ(result.nodes.front().q.matrix(),
            gms_local_solve(data, SymMatrix::zero(5), GmsParams{}).q.matrix());
}

TEST(CbgaRun, IdenticalDataStaysIdentical) {
  Rng rng(6);
  const Matrix points = testing::gaussian_matrix(rng, 30, 4);
  const std::vector<LocalDataset> data(4, LocalDataset(points));
  const NetworkGraph g = canned_topology(TopologyKind::kPaperRandom, 4, 1);
  RecordingMonitor<SymMatrix> monitor;
  cbga_gms_run(data, g, config(50.0, 20), GmsParams{}, &monitor);
  ASSERT_EQ(monitor.snapshots.size(), 21u);
  for (const auto& snap : monitor.snapshots) {
    for (const auto& node : snap.nodes) {
      EXPECT_EQ(node.q.matrix(), snap.nodes.front().q.matrix());
      EXPECT_EQ(node.dual.frobenius_norm(), 0.0);
    }
  }
}

TEST(CbgaRun, DualsConserveAndStayTraceless) {
  Subspace truth;
  const auto data = synthetic_blocks(5, 8, 2, 50, 50, 0.05, 7, &truth);
  const NetworkGraph g = canned_topology(TopologyKind::kPaperRandom, 5, 2);
  const double mu = practical_step_size(data, g, 1, 1e-10);
  ConsensusConfig cfg = config(mu, 40);
  cfg.track_edge_multipliers = true;
  RecordingMonitor<SymMatrix> monitor;
  cbga_gms_run(data, g, cfg, GmsParams{}, &monitor);
  for (const auto& snap : monitor.snapshots) {
    Matrix total = Matrix::Zero(8, 8);
    for (const auto& node : snap.nodes) {
      total += node.dual.matrix();
      EXPECT_NEAR(node.dual.trace(), 0.0, 1e-9);
      EXPECT_NEAR(node.q.trace(), 1.0, 1e-10);
    }
    EXPECT_LE(total.norm(), 1e-9);
  }
}

TEST(CbgaRun, ConvergesToCentralizedGms) {
  Subspace truth;
  const auto data = synthetic_blocks(5, 20, 3, 250, 250, 0.05, 8, &truth);
  const NetworkGraph g = canned_topology(TopologyKind::kPaperRandom, 5, 3);
  const double mu = practical_step_size(data, g, 1, 1e-10);
  RecordingMonitor<SymMatrix> monitor;
  ConsensusConfig cfg = config(mu, 250);
  const auto result = cbga_gms_run(data, g, cfg, GmsParams{}, &monitor);
  const oracle::CentralGms central = oracle::central_gms(pooled(data));
  for (const auto& node : result.nodes) {
    EXPECT_LE((node.q.matrix() - central.q).norm(), 1e-2);
  }
  const double early = max_disagreement(monitor.snapshots[10].nodes, g);
  const double late = max_disagreement(result.nodes, g);
  EXPECT_LT(late, early);

  // Dual objective trend: 25-step moving average of sum_k d_k never drops by more than 1e-6.
  std::vector<double> dual_values;
  for (const auto& snap : monitor.snapshots) {
    double total = 0.0;
    for (double v : snap.objectives) total += v;
    dual_values.push_back(total);
  }
  double previous = -1e300;
  for (std::size_t end = 25; end <= dual_values.size(); ++end) {
    double avg = 0.0;
    for (std::size_t i = end - 25; i < end; ++i) avg += dual_values[i];
    avg /= 25.0;
    EXPECT_GE(avg, previous - 1e-6) << "window ending at " << end;
    previous = avg;
  }
}

TEST(CbgaRun, ResultIndependentOfWorkerCount) {
  const auto data = synthetic_blocks(6, 6, 2, 60, 60, 0.1, 9);
  const NetworkGraph g = canned_topology(TopologyKind::kComplete, 6);
  ConsensusConfig cfg = config(practical_step_size(data, g, 1, 1e-10), 15);
  cfg.workers = 1;
  const auto serial = cbga_gms_run(data, g, cfg, GmsParams{});
  cfg.workers = 4;
  const auto parallel = cbga_gms_run(data, g, cfg, GmsParams{});
  for (int k = 0; k < 6; ++k) {
    EXPECT_EQ(serial.nodes[k].q.matrix(), parallel.nodes[k].q.matrix());
    EXPECT_EQ(serial.nodes[k].dual.matrix(), parallel.nodes[k].dual.matrix());
  }
}

TEST(CbgaRun, HalvesStepOnPositiveDefinitenessFailure) {
  // Toy solver that fails whenever the aggregate is large, as the GMS solver does.
  const NetworkGraph g(2, {{1, 2}});
  std::vector<Vector> targets = {Vector::Constant(1, 1.0), Vector::Constant(1, -1.0)};
  const LocalSolveFn<Vector> solve = [&](int node, const Vector& a, const Vector*) {
    if (a.norm() > 0.5) throw NotPositiveDefiniteError("aggregate too large");
    Vector y = targets[node - 1] - a;
    return LocalSolution<Vector>{y, y.squaredNorm()};
  };
  std::vector<std::string> log;
  ConsensusConfig cfg = config(1.0, 3);
  cfg.log = [&](const std::string& line) { log.push_back(line); };
  RecordingMonitor<Vector> monitor;
  const auto result = cbga_run(solve, Vector(Vector::Zero(1)), g, cfg, &monitor);
  EXPECT_GE(result.halvings, 1);
  EXPECT_DOUBLE_EQ(result.step_size, 1.0 / (1 << result.halvings));
  EXPECT_EQ(log.size(), static_cast<std::size_t>(result.halvings));
  EXPECT_EQ(monitor.restarts.size(), static_cast<std::size_t>(result.halvings));
  EXPECT_EQ(monitor.snapshots.front().s, 0);
}

TEST(CbgaRun, GivesUpAfterHalvingBudget) {
  const NetworkGraph g(2, {{1, 2}});
  const LocalSolveFn<Vector> solve = [&](int node, const Vector&, const Vector* prev) {
    if (prev != nullptr && node == 2) throw NotPositiveDefiniteError("always");
    return LocalSolution<Vector>{Vector::Constant(1, node), 0.0};
  };
  ConsensusConfig cfg = config(1.0, 3);
  cfg.max_step_halvings = 2;
  try {
    cbga_run(solve, Vector(Vector::Zero(1)), g, cfg);
    FAIL() << "expected NodeSolveError";
  } catch (const NodeSolveError& e) {
    EXPECT_EQ(e.node(), 2);
    EXPECT_EQ(e.iteration(), 1);
    EXPECT_TRUE(e.step_size_related());
  }
}

TEST(CbgaRun, OtherErrorsAbortWithoutHalving) {
  const NetworkGraph g(2, {{1, 2}});
  const LocalSolveFn<Vector> solve = [&](int node, const Vector&, const Vector*) -> LocalSolution<Vector> {
    if (node == 1) throw PreconditionError("bad block");
    return {Vector::Zero(1), 0.0};
  };
  std::vector<std::string> log;
  ConsensusConfig cfg = config(1.0, 3);
  cfg.log = [&](const std::string& line) { log.push_back(line); };
  EXPECT_THROW(cbga_run(solve, Vector(Vector::Zero(1)), g, cfg), NodeSolveError);
  EXPECT_TRUE(log.empty());
}

TEST(CbgaRun, CompressionOnlyForMatrices) {
  const NetworkGraph g(2, {{1, 2}});
  const LocalSolveFn<Vector> solve = [](int, const Vector& a, const Vector*) {
    return LocalSolution<Vector>{a, 0.0};
  };
  ConsensusConfig cfg = config(1.0, 3);
  cfg.compression_top_d = 1;
  EXPECT_THROW(cbga_run(solve, Vector(Vector::Zero(2)), g, cfg), ConfigError);
}

TEST(CbgaRun, CompressedRunKeepsConservation) {
  const auto data = synthetic_blocks(4, 6, 2, 40, 40, 0.05, 10);
  const NetworkGraph g(4, {{1, 2}, {2, 3}, {3, 4}});
  ConsensusConfig cfg = config(practical_step_size(data, g, 1, 1e-10), 10);
  cfg.compression_top_d = 2;
  RecordingMonitor<SymMatrix> monitor;
  cbga_gms_run(data, g, cfg, GmsParams{}, &monitor);
  for (const auto& snap : monitor.snapshots) {
    Matrix total = Matrix::Zero(6, 6);
    for (const auto& node : snap.nodes) total += node.dual.matrix();
    EXPECT_LE(total.norm(), 1e-9);
  }
}

TEST(CadmmRun, IdenticalDataIsStationary) {
  Rng rng(11);
  const Matrix points = testing::gaussian_matrix(rng, 30, 4);
  const std::vector<LocalDataset> data(3, LocalDataset(points));
  // Every node has the same degree, so the penalty terms agree bit for bit.
  const NetworkGraph g = canned_topology(TopologyKind::kComplete, 3);
  GmsParams params;
  params.t_gms = 2000;
  params.relative_tolerance = 0.0;
  RecordingMonitor<SymMatrix> monitor;
  cadmm_run(data, g, config(20.0, 10), params, &monitor);
  const SymMatrix first = monitor.snapshots.front().nodes.front().q;
  for (const auto& snap : monitor.snapshots) {
    for (const auto& node : snap.nodes) {
      EXPECT_EQ(node.dual.frobenius_norm(), 0.0);
      EXPECT_LE(frobenius_distance(node.q, first), 1e-9);
    }
  }
}

TEST(CadmmRun, FirstSuperstepDualsByHand) {
  const auto data = synthetic_blocks(2, 5, 2, 20, 20, 0.1, 12);
  const NetworkGraph g(2, {{1, 2}});
  const double rho = 30.0;
  RecordingMonitor<SymMatrix> monitor;
  cadmm_run(data, g, config(rho, 1), GmsParams{}, &monitor);
  ASSERT_EQ(monitor.snapshots.size(), 2u);
  const auto& q0 = monitor.snapshots[0].nodes;
  const auto& s1 = monitor.snapshots[1].nodes;
  EXPECT_LE((s1[0].dual.matrix() - rho * (q0[0].q - q0[1].q).matrix()).norm(), 1e-12);
  EXPECT_LE((s1[0].dual + s1[1].dual).frobenius_norm(), 1e-12);
}

TEST(CadmmRun, ConvergesToCentralizedGms) {
  const auto data = synthetic_blocks(4, 10, 2, 120, 120, 0.05, 13);
  const NetworkGraph g(4, {{1, 2}, {2, 3}, {3, 4}, {1, 4}});
  const auto result = cadmm_run(data, g, config(50.0, 250), GmsParams{});
  const oracle::CentralGms central = oracle::central_gms(pooled(data));
  for (const auto& node : result.nodes) EXPECT_LE((node.q.matrix() - central.q).norm(), 1e-2);
}

TEST(Compression, ScaledProjectorRoundTrip) {
  Rng rng(14);
  const Matrix basis = testing::random_basis(rng, 7, 3);
  const SymMatrix q = SymMatrix::symmetrized(basis * basis.transpose() / 3.0);
  EXPECT_LE(frobenius_distance(decompress(compress_state(q, 3)), q), 1e-10);
}

TEST(Compression, TraceOneAndLowRank) {
  Rng rng(15);
  for (int trial = 0; trial < 20; ++trial) {
    const SymMatrix q = testing::random_trace_one_pd(rng, 8);
    const int d = testing::uniform_int(rng, 1, 7);
    const SymMatrix r = decompress(compress_state(q, d));
    EXPECT_NEAR(r.trace(), 1.0, 1e-12);
    Eigen::SelfAdjointEigenSolver<Matrix> es(r.matrix());
    EXPECT_EQ((es.eigenvalues().array() > 1e-12).count(), d);
  }
}

TEST(Compression, ErrorMatchesSpectralTruncation) {
  Rng rng(16);
  for (int trial = 0; trial < 50; ++trial) {
    const SymMatrix q = testing::random_trace_one_pd(rng, 10);
    const double actual = frobenius_distance(decompress(compress_state(q, 3)), q);
    EXPECT_NEAR(actual, oracle::truncation_error_from_spectrum(q.matrix(), 3), 1e-12);
  }
}

TEST(Compression, RankOutOfRange) {
  const SymMatrix q = 0.25 * SymMatrix::identity(4);
  EXPECT_THROW(compress_state(q, 0), ConfigError);
  EXPECT_THROW(compress_state(q, 4), ConfigError);
}

TEST(MaxDisagreement, LargestEdgeDistance) {
  const NetworkGraph g(3, {{1, 2}, {2, 3}});
  std::vector<VectorNodeState> nodes = {{1, Vector::Constant(1, 0.0), {}},
                                        {2, Vector::Constant(1, 1.0), {}},
                                        {3, Vector::Constant(1, 4.0), {}}};
  EXPECT_DOUBLE_EQ(max_disagreement(nodes, g), 3.0);
}

}  // namespace
}  // namespace drsr
