#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "lagather/costmodel.hpp"
#include "lagather/verify.hpp"
#include "oracles.hpp"

using namespace lagather;

namespace {

CostParams link(double a, double b, double al, double bl) { return CostParams::single_protocol({a, b, al, bl}); }

double bruck_tally_cost(const Topology& t, const CostParams& params, AlgorithmId alg) {
  const auto res = run(alg, t);
  return locality_cost(model_input_for_rank(res.events, res.tally.critical_rank()), params);
}

}  // namespace

TEST(ProtocolSelect, Threshold) {
  const auto params = default_cost_params();
  EXPECT_EQ(protocol_select(8192, params), Protocol::Rendezvous);
  EXPECT_EQ(protocol_select(8191, params), Protocol::Eager);
  EXPECT_EQ(protocol_select(0, params), Protocol::Eager);
  for (std::int64_t m : {0, 1, 8191, 8192, 1 << 20}) EXPECT_EQ(protocol_select(m, params), protocol_select(m, params));
}

TEST(PostalCost, Examples) {
  EXPECT_DOUBLE_EQ(postal_cost(ModelInput{4, 60, 0, 0, {}}, link(1, 0, 0, 0)), 4.0);
  EXPECT_EQ(postal_cost(ModelInput{}, default_cost_params()), 0.0);

  // Locality is ignored: local messages pay non-local prices.
  EXPECT_DOUBLE_EQ(postal_cost(ModelInput{1, 16, 4, 15, {}}, link(10, 0, 1, 0)), 50.0);

  const Topology t(16, 4);
  oracle::Counts rank0 = oracle::bruck_sends(16, 4, 1)[0];
  const ModelInput in{rank0.msgs_nonlocal, rank0.values_nonlocal * 4, rank0.msgs_local, rank0.values_local * 4, {}};
  EXPECT_NEAR(postal_cost(in, link(2e-6, 1e-9, 0, 0)), 4 * 2e-6 + 60 * 1e-9, 1e-18);
}

TEST(PostalCost, RejectsInvalidInput) {
  EXPECT_THROW(postal_cost(ModelInput{-1, 0, 0, 0, {}}, default_cost_params()), std::invalid_argument);
  EXPECT_THROW(postal_cost(ModelInput{0, 5, 0, 0, {}}, default_cost_params()), std::invalid_argument);
  EXPECT_THROW(postal_cost(ModelInput{2, 5, 0, 0, MessageSizes{{5}, {}}}, default_cost_params()),
               std::invalid_argument);
}

TEST(LocalityCost, Examples) {
  EXPECT_DOUBLE_EQ(locality_cost(ModelInput{1, 16, 4, 123, {}}, link(10, 0, 1, 0)), 14.0);
  EXPECT_EQ(locality_cost(ModelInput{}, default_cost_params()), 0.0);
}

TEST(LocalityCost, ProtocolPerMessage) {
  CostParams params{LinkParams{1, 0, 0, 0}, LinkParams{100, 0, 0, 0}, 8192};
  const ModelInput in{2, 8191 + 8192, 0, 0, MessageSizes{{8191, 8192}, {}}};
  EXPECT_DOUBLE_EQ(locality_cost(in, params), 101.0);
}

// The locality-aware tally beats Bruck once the local link is clearly cheaper.
TEST(LocalityCost, LocalityTallyBelowBruckTally) {
  const Topology t(16, 4);
  auto gen = oracle::rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const double a = 1e-7 + 1e-5 * u(gen), b = 1e-11 + 1e-9 * u(gen);
    const auto params = link(a, b, a / (5 + 100 * u(gen)), b / (5 + 100 * u(gen)));
    EXPECT_LE(bruck_tally_cost(t, params, AlgorithmId::LocalityBruck), bruck_tally_cost(t, params, AlgorithmId::Bruck));
  }
}

// Equal local and non-local prices: 5 messages and 76 bytes against 4 and 60.
TEST(LocalityCost, EqualPricesFavourBruck) {
  const Topology t(16, 4);
  const auto params = link(1e-6, 1e-9, 1e-6, 1e-9);
  EXPECT_GT(bruck_tally_cost(t, params, AlgorithmId::LocalityBruck), bruck_tally_cost(t, params, AlgorithmId::Bruck));
}

TEST(BruckModel, Examples) {
  const Topology t(16, 4);
  EXPECT_DOUBLE_EQ(bruck_model(t, link(1, 0, 0, 0), ModelVariant::Paper), 4.0);
  EXPECT_DOUBLE_EQ(bruck_model(t, link(1, 0, 0, 0), ModelVariant::Exact), 4.0);
  EXPECT_DOUBLE_EQ(bruck_model(t, link(0, 1, 0, 0), ModelVariant::Paper), 63.0);
  EXPECT_DOUBLE_EQ(bruck_model(t, link(0, 1, 0, 0), ModelVariant::Exact), 60.0);
  EXPECT_THROW(bruck_model(Topology(12, 4), default_cost_params(), ModelVariant::Paper), UnsupportedTopology);
}

TEST(LocalityBruckModel, Examples) {
  const Topology t(16, 4);
  EXPECT_DOUBLE_EQ(locality_bruck_model(t, link(1, 0, 1, 0), ModelVariant::Paper), 3.0);
  EXPECT_DOUBLE_EQ(locality_bruck_model(t, link(0, 1, 0, 0), ModelVariant::Paper), 16.0);
  EXPECT_DOUBLE_EQ(locality_bruck_model(t, link(0, 1, 0, 0), ModelVariant::Exact), 16.0);
  EXPECT_THROW(locality_bruck_model(Topology(16, 1), default_cost_params(), ModelVariant::Paper), UnsupportedTopology);
  EXPECT_THROW(locality_bruck_model(Topology(32, 4), default_cost_params(), ModelVariant::Exact), UnsupportedTopology);
}

TEST(ModelCost, HierarchicalHasNoClosedForm) {
  const Topology t(16, 4);
  EXPECT_FALSE(model_cost(AlgorithmId::Hierarchical, t, default_cost_params(), ModelVariant::Paper));
  EXPECT_TRUE(model_cost(AlgorithmId::Hierarchical, t, default_cost_params(), ModelVariant::Exact));
}

TEST(ExactModel, EqualsSimulatedCriticalRankCost) {
  const auto params = default_cost_params();
  auto points = standard_grid({2, 16, 64, 256}, {1, 2, 4, 8, 16}, {1, 3});
  for (const auto& g : standard_grid({16, 64}, {1, 4}, {2048})) points.push_back(g);  // rendezvous-sized messages
  for (const auto& g : points) {
    const auto res = run(g.algorithm, g.topo);
    const double sim = locality_cost(model_input_for_rank(res.events, res.tally.critical_rank()), params);
    const auto exact = model_cost(g.algorithm, g.topo, params, ModelVariant::Exact);
    ASSERT_TRUE(exact);
    EXPECT_TRUE(relative_close(*exact, sim, 1e-12)) << describe(g) << ' ' << *exact << ' ' << sim;
  }
}

TEST(Models, MonotoneInEveryParameter) {
  auto gen = oracle::rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::vector<Topology> topos{Topology(16, 4), Topology(64, 4, 4, 3), Topology(256, 16, 4, 2048),
                                    Topology(64, 8)};
  for (int trial = 0; trial < 100; ++trial) {
    CostParams base{LinkParams{1e-5 * u(gen), 1e-9 * u(gen), 1e-6 * u(gen), 1e-10 * u(gen)},
                    LinkParams{1e-5 * u(gen), 1e-9 * u(gen), 1e-6 * u(gen), 1e-10 * u(gen)}, 8192};
    for (int field = 0; field < 8; ++field) {
      CostParams bumped = base;
      LinkParams& l = field < 4 ? bumped.eager : bumped.rendezvous;
      double* f[] = {&l.alpha, &l.beta, &l.alpha_local, &l.beta_local};
      *f[field % 4] *= 1.5 + u(gen);
      for (const auto& t : topos)
        for (auto alg : kAllAlgorithms)
          for (auto v : {ModelVariant::Paper, ModelVariant::Exact}) {
            if (!supports(alg, t)) continue;
            const auto lo = model_cost(alg, t, base, v), hi = model_cost(alg, t, bumped, v);
            if (lo) { EXPECT_LE(*lo, *hi) << describe(t) << ' ' << to_string(alg) << ' ' << field; }
          }
    }
  }
}

// Single protocol so a size change cannot switch to cheaper parameters.
TEST(Models, MonotoneInDataSize) {
  const auto params = link(2e-6, 4e-10, 3e-7, 8e-11);
  for (auto alg : kAllAlgorithms)
    for (int pl : {2, 4, 16})
      for (auto v : {ModelVariant::Paper, ModelVariant::Exact}) {
        double prev = -1;
        for (int n = 1; n <= 4096; n *= 4) {
          const Topology t(256, pl, 4, n);
          if (!supports(alg, t)) break;
          const auto c = model_cost(alg, t, params, v);
          if (!c) break;
          EXPECT_GE(*c, prev);
          prev = *c;
        }
      }
}

// With more than one region every message of rank 0 leaves its region, so both
// variants price the same link.
TEST(Models, BruckPaperVsExactBound) {
  auto gen = oracle::rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const auto params = link(1e-5 * u(gen), 1e-9 * u(gen), 1e-6 * u(gen), 1e-10 * u(gen));
    for (int p : {4, 16, 256, 1024})
      for (int pl : {2, 4})
        for (int n : {1, 3, 100}) {
          if (pl == p) continue;
          const Topology t(p, pl, 4, n);
          const double paper = bruck_model(t, params, ModelVariant::Paper);
          const double exact = bruck_model(t, params, ModelVariant::Exact);
          const double b = detail::gathered_bytes(t);
          EXPECT_LE(std::abs(paper - exact), params.eager.beta * b / p * (1 + 1e-12)) << describe(t);
        }
  }
}

TEST(Params, RoundTripAndDefaultsFile) {
  std::stringstream ss;
  write_cost_params(ss, default_cost_params());
  EXPECT_EQ(parse_cost_params(ss), default_cost_params());
  EXPECT_EQ(load_cost_params(LAGATHER_PRESET_DIR "/default.params"), default_cost_params());
  const auto single = load_cost_params(LAGATHER_PRESET_DIR "/single-protocol.params");
  EXPECT_EQ(single.eager, single.rendezvous);
}

TEST(Params, ParsesCommentsAndScientific) {
  std::istringstream in(
      "# comment\n"
      "eager.alpha = 1e-6\neager.beta=2.5E-10\neager.alpha_local = 0.0000003\neager.beta_local = 8e-11\n"
      "rendezvous.alpha = 6e-6\nrendezvous.beta = 2.5e-10\nrendezvous.alpha_local = 1.2e-6\n"
      "rendezvous.beta_local = 5e-11\n\nthreshold_bytes = 4096  # switch point\n");
  const auto p = parse_cost_params(in);
  EXPECT_EQ(p.eager.alpha, 1e-6);
  EXPECT_EQ(p.eager.beta, 2.5e-10);
  EXPECT_EQ(p.eager.alpha_local, 3e-7);
  EXPECT_EQ(p.threshold_bytes, 4096);
}

TEST(Params, Errors) {
  std::stringstream full;
  write_cost_params(full, default_cost_params());
  const std::string text = full.str();

  std::istringstream missing(text.substr(0, text.find("threshold_bytes")));
  EXPECT_THROW(parse_cost_params(missing), std::invalid_argument);
  std::istringstream unknown(text + "gamma = 1\n");
  EXPECT_THROW(parse_cost_params(unknown), std::invalid_argument);
  std::istringstream dup(text + "eager.alpha = 1\n");
  EXPECT_THROW(parse_cost_params(dup), std::invalid_argument);
  std::istringstream junk(text.substr(0, text.find("threshold_bytes")) + "threshold_bytes = 12abc\n");
  EXPECT_THROW(parse_cost_params(junk), std::invalid_argument);
  std::istringstream neg(text.substr(0, text.find("threshold_bytes")) + "threshold_bytes = 0\n");
  EXPECT_THROW(parse_cost_params(neg), std::invalid_argument);

  EXPECT_THROW(load_cost_params("/nonexistent/lagather.params"), IoError);
}

TEST(Params, LocalityWarnings) {
  EXPECT_TRUE(locality_warnings(default_cost_params()).empty());
  EXPECT_FALSE(locality_warnings(link(1, 1, 2, 0)).empty());
}

TEST(SweepModels, RowsAndErrors) {
  const std::vector<Topology> one{Topology(16, 4)};
  const std::array<AlgorithmId, 1> bruck{AlgorithmId::Bruck};
  const auto rows = sweep_models(one, default_cost_params(), bruck);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].variant, ModelVariant::Paper);
  EXPECT_TRUE(rows[0].seconds && rows[1].seconds);

  const std::vector<Topology> mixed{Topology(12, 4), Topology(64, 4)};
  const auto all = sweep_models(mixed, default_cost_params());
  EXPECT_EQ(all.size(), 2u * kAllAlgorithms.size() * 2u);
  for (const auto& r : all) {
    EXPECT_EQ(r.seconds.has_value(), r.error.empty());
    if (r.topo.p() == 12 && r.algorithm == AlgorithmId::Ring) {
      EXPECT_TRUE(r.seconds);
    }
    if (r.topo.p() == 12 && r.algorithm == AlgorithmId::Bruck) {
      EXPECT_FALSE(r.seconds);
    }
  }
}

// Node-count sweep with a strongly local-favouring preset.
TEST(SweepModels, LocalityCurveBelowBruck) {
  const auto params = default_cost_params();
  for (int pl : {8, 16})
    for (int r = 2; r <= 1024; r *= 2) {
      const Topology t(r * pl, pl);
      EXPECT_LT(locality_bruck_model(t, params, ModelVariant::Paper), bruck_model(t, params, ModelVariant::Paper))
          << describe(t);
    }
}
