// Multiplicity census, commutants, serialization, configs and the CLI.

#include "bergman/bergman.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sys/wait.h>

using namespace bergman;
namespace fs = std::filesystem;

namespace {

MultiIndex mi(int n, int m, std::vector<int> e) { return MultiIndex(n, m, std::move(e)); }

std::size_t commutant_dim(int n, int m, int cutoff) { return commutant_basis(torus_generators(n, m, cutoff)).size(); }

// Oracle: sum of squared class sizes.
std::size_t squared_class_sizes(int n, int m, int cutoff) {
  std::size_t s = 0;
  for (const auto& c : weight_census(n, m, cutoff).classes) s += c.members.size() * c.members.size();
  return s;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("bergman_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Report run_text(const std::string& toml, const RunOptions& opt = {}) {
  return run(parse_config(apply_overrides(parse_config_text(toml), opt)), opt);
}

ErrorCode config_error(const std::string& toml) {
  try {
    parse_config(parse_config_text(toml));
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::invalid_argument;
}

}  // namespace

// ---------------------------------------------------------------------------
// Weights and census

TEST(Census, WeightOfExamples) {
  const Weight w = weight_of(mi(2, 2, {1, 0, 0, 1}));
  EXPECT_EQ(w.rows, (std::vector<int>{1, 1}));
  EXPECT_EQ(w.cols, (std::vector<int>{1, 1}));
  EXPECT_EQ(weight_of(mi(2, 2, {0, 1, 1, 0})), w);
  const Weight b = weight_of(mi(3, 1, {2, 0, 1}));
  EXPECT_EQ(b.rows, (std::vector<int>{2, 0, 1}));
  EXPECT_EQ(b.cols, (std::vector<int>{3}));
}

TEST(Census, RankOneDomainsAreMultiplicityFree) {
  for (int n = 1; n <= 3; ++n)
    for (int c = 0; c <= 5; ++c) {
      const auto r = weight_census(n, 1, c);
      EXPECT_EQ(r.max_multiplicity, 1);
      EXPECT_TRUE(r.witnesses.empty());
      EXPECT_EQ(r.monomial_count, monomial_count(n, c));
      EXPECT_TRUE(is_multiplicity_free_torus(1, n, c).multiplicity_free);
    }
}

TEST(Census, TwoByTwoFirstCollision) {
  EXPECT_TRUE(is_multiplicity_free_torus(2, 2, 1).multiplicity_free);
  const auto v = is_multiplicity_free_torus(2, 2, 2);
  ASSERT_FALSE(v.multiplicity_free);
  ASSERT_TRUE(v.witness.has_value());
  const std::set<MultiIndex> pair = {v.witness->first, v.witness->second};
  EXPECT_EQ(pair, (std::set<MultiIndex>{mi(2, 2, {1, 0, 0, 1}), mi(2, 2, {0, 1, 1, 0})}));
}

TEST(Census, TwoByTwoDegreeFour) {
  const auto r = weight_census(2, 2, 4);
  EXPECT_EQ(r.monomial_count, 70u);
  std::size_t total = 0;
  for (const auto& c : r.classes) total += c.members.size();
  EXPECT_EQ(total, 70u);
  EXPECT_EQ(r.max_multiplicity, 3);
  EXPECT_EQ(r.q_shift_only, std::optional<bool>(true));
  const auto slice = degree_slice(r, 2);
  EXPECT_EQ(slice.size(), 9u);
  int at_two = 0;
  for (const auto& c : slice) at_two += c.multiplicity() == 2;
  EXPECT_EQ(at_two, 1);
  bool found = false;
  for (const auto& c : degree_slice(r, 4))
    if (c.multiplicity() == 3) {
      found = true;
      EXPECT_EQ(c.weight.rows, (std::vector<int>{2, 2}));
      EXPECT_EQ(c.weight.cols, (std::vector<int>{2, 2}));
    }
  EXPECT_TRUE(found);
}

TEST(Census, MonomialCount) {
  EXPECT_EQ(monomial_count(4, 2), 15u);
  EXPECT_EQ(monomial_count(1, 7), 8u);
  EXPECT_EQ(monomial_count(6, 0), 1u);
}

// ---------------------------------------------------------------------------
// Commutants

TEST(Commutant, SmallExamples) {
  const CMatrix id = CMatrix::Identity(4, 4);
  EXPECT_EQ(commutant_basis({id}).size(), 16u);
  CMatrix d = CMatrix::Zero(4, 4);
  d.diagonal() << 1.0, 2.0, 3.0, 4.0;
  const auto cd = commutant_basis({d});
  EXPECT_EQ(cd.size(), 4u);
  EXPECT_TRUE(algebra_is_commutative(cd).commutative);

  CMatrix e12 = CMatrix::Zero(2, 2), e21 = CMatrix::Zero(2, 2);
  e12(0, 1) = 1.0;
  e21(1, 0) = 1.0;
  const auto v = algebra_is_commutative({e12, e21});
  EXPECT_FALSE(v.commutative);
  EXPECT_EQ(v.witness, std::make_optional(std::make_pair(std::size_t{0}, std::size_t{1})));
  EXPECT_THROW(commutant_basis({}), Error);
}

TEST(Commutant, TorusDimensionMatchesTheCensus) {
  EXPECT_EQ(commutant_dim(2, 2, 2), 17u);
  for (const auto& [n, m] : {std::pair{1, 1}, std::pair{2, 1}, std::pair{1, 3}, std::pair{2, 2}, std::pair{3, 2}})
    for (int c = 0; c <= 3; ++c) {
      const auto basis = commutant_basis(torus_generators(n, m, c));
      EXPECT_EQ(basis.size(), squared_class_sizes(n, m, c)) << n << "x" << m << " c=" << c;
      EXPECT_EQ(algebra_is_commutative(basis).commutative, weight_census(n, m, c).max_multiplicity <= 1);
    }
}

TEST(Commutant, ConjugatedGeneratorsTakeTheGeneralPath) {
  const auto gens = torus_generators(2, 2, 2);
  const Eigen::Index d = gens.front().rows();
  CounterStream s(3, 3);
  CMatrix g(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) g(i, j) = cplx(s.normal(), s.normal());
  const CMatrix u = Eigen::HouseholderQR<CMatrix>(g).householderQ();
  std::vector<CMatrix> conj;
  for (const auto& r : gens) conj.push_back(u * r * u.adjoint());
  ASSERT_FALSE(detail::is_diagonal(conj.front()));
  const auto basis = commutant_basis(conj);
  EXPECT_EQ(basis.size(), 17u);
  for (const auto& x : basis)
    for (const auto& r : conj) EXPECT_LT(max_abs(x * r - r * x), 1e-9);
  EXPECT_FALSE(algebra_is_commutative(basis).commutative);
}

// ---------------------------------------------------------------------------
// Serialization

TEST(Io, DomainRoundTripRecomputesGenus) {
  for (const Domain& d : {Domain::unit_ball(1), Domain::unit_ball(3), Domain::matrix_ball(2, 3)}) {
    const Domain back = domain_from_json(to_json(d));
    EXPECT_TRUE(back.same_shape(d));
    EXPECT_EQ(back.genus(), d.genus());
  }
  Json bad = to_json(Domain::matrix_ball(2, 2));
  bad["genus"] = 7;
  EXPECT_THROW(domain_from_json(bad), Error);
}

TEST(Io, CanonicalJsonSortsKeysAndKeepsFullPrecision) {
  const std::string s = canonical_json(Json{{"zeta", 1}, {"alpha", 0.1}});
  EXPECT_LT(s.find("alpha"), s.find("zeta"));
  EXPECT_NE(s.find("0.10000000000000001"), std::string::npos);
  EXPECT_EQ(Json::parse(s)["alpha"].get<double>(), 0.1);
  EXPECT_THROW(canonical_json(Json(std::nan(""))), Error);
}

TEST(Io, RuleBasisAndOperatorRoundTrips) {
  const Domain d = Domain::unit_ball(1);
  const auto rule = radial_rule(d, 2.5, 8);
  const auto rule2 = rule_from_json(Json::parse(canonical_json(to_json(rule))));
  EXPECT_EQ(rule2.id, rule.id);
  ASSERT_EQ(rule2.nodes.size(), rule.nodes.size());
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    EXPECT_EQ(rule2.nodes[i], rule.nodes[i]);
    EXPECT_EQ(rule2.weights[i], rule.weights[i]);
  }
  const auto b = make_basis(d, 2.5, 6);
  const auto b2 = basis_from_json(Json::parse(canonical_json(to_json(b))));
  EXPECT_EQ(b2.basis_id, b.basis_id);
  EXPECT_EQ(b2.transform, b.transform);

  const auto t = toeplitz_matrix(b, Symbol::coordinate(0, 0), rule);
  const auto t2 = operator_from_json(Json::parse(canonical_json(to_json(t))));
  EXPECT_EQ(t2.entries, t.entries);
  EXPECT_EQ(t2.basis_id, t.basis_id);
  EXPECT_TRUE(diff_matrices(t, t2, 0.0).pass);

  auto shifted = t2;
  shifted.entries(0, 1) += 1e-6;
  const auto diff = diff_matrices(t, shifted, 1e-9);
  EXPECT_FALSE(diff.pass);
  EXPECT_NEAR(diff.max_abs, 1e-6, 1e-12);
  shifted.basis_id = "other";
  EXPECT_FALSE(diff_matrices(t, shifted, 1.0).pass);
}

TEST(Io, StochasticBasisRoundTrip) {
  const Domain d = Domain::matrix_ball(2, 2);
  const auto rule = mc_sample(d, 5.0, 5000, 12);
  const auto b = make_basis(d, 5.0, 1, &rule);
  const auto b2 = basis_from_json(Json::parse(canonical_json(to_json(b))));
  EXPECT_EQ(b2.basis_id, b.basis_id);
  EXPECT_EQ(b2.transform_replicates.size(), b.transform_replicates.size());
  EXPECT_LT(max_abs(b2.transform - b.transform), 1e-15);
}

TEST(Io, CensusCsv) {
  const std::string csv = census_csv(weight_census(2, 2, 2));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "degree,rows,cols,multiplicity,members");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 14);
  EXPECT_NE(csv.find("2,1 1,1 1,2,"), std::string::npos);
}

// ---------------------------------------------------------------------------
// Configs and reports

TEST(Config, RejectsInvalidInput) {
  EXPECT_EQ(config_error("experiment = \"norms\"\n[[cases]]\ndomain = { kind = \"disk\" }\nlambda = 1.0\ncutoff = 3\n"),
            ErrorCode::config);
  EXPECT_EQ(config_error("experiment = \"unknown\"\n[[cases]]\nn = 1\n"), ErrorCode::config);
  EXPECT_EQ(config_error("experiment = \"norms\"\ncases = [\n"), ErrorCode::config);
  EXPECT_EQ(config_error("experiment = \"norms\"\nwhen = 1979-05-27\n[[cases]]\nn = 1\n"), ErrorCode::config);
  EXPECT_EQ(config_error("experiment = \"commutator\"\n[[cases]]\ndomain = { kind = \"disk\" }\nlambda = 2.0\n"
                         "cutoff = 3\npairs = [{ a = { family = \"nope\" }, b = { family = \"radial\", profile = \"identity\" } }]\n"),
            ErrorCode::config);
}

TEST(Config, EmptyReportRendering) {
  const Report r;
  EXPECT_TRUE(r.empty());
  EXPECT_EQ(report_render(r, ReportFormat::json), "{}\n");
  EXPECT_EQ(report_render(r, ReportFormat::human), "");
  EXPECT_THROW(parse_format("xml"), Error);
}

TEST(Config, RunsAreDeterministicAndSeedable) {
  const std::string toml =
      "experiment = \"commutator\"\nseed = 5\n[[cases]]\ndomain = { kind = \"matrix_ball\", n = 2, m = 2 }\n"
      "lambda = 5.0\ncutoff = 1\nrule = { kind = \"monte_carlo\", samples = 3000 }\n"
      "pairs = [{ a = { family = \"radial\", profile = \"power\", params = [2] }, "
      "b = { family = \"k_invariant\", statistic = \"trace2\", profile = \"identity\" }, expect = \"zero\" }]\n";
  const std::string a = report_render(run_text(toml), ReportFormat::json);
  const std::string b = report_render(run_text(toml), ReportFormat::json);
  EXPECT_EQ(a, b);
  RunOptions opt;
  opt.seed = 6;
  const std::string c = report_render(run_text(toml, opt), ReportFormat::json);
  EXPECT_NE(a, c);
  EXPECT_EQ(Json::parse(c)["seed"].get<std::uint64_t>(), 6u);
}

TEST(Config, CensusReportAsCsv) {
  const Report r = run_text("experiment = \"census\"\n[[cases]]\nn = 2\nm = 2\ncutoff = 2\nmin_max_multiplicity = 2\n");
  EXPECT_TRUE(r.pass());
  const std::string csv = report_render(r, ReportFormat::csv);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "case,degree,rows,cols,multiplicity,members");
  EXPECT_NE(csv.find("0,2,1 1,1 1,2,1 0;0 1|0 1;1 0"), std::string::npos);
}

TEST(Config, ModuleErrorsFailTheVerdict) {
  const Report r = run_text(
      "experiment = \"commutator\"\n[[cases]]\ndomain = { kind = \"disk\" }\nlambda = 2.0\ncutoff = 3\n"
      "pairs = [{ a = { family = \"parabolic\", profile = \"identity\", bounding = \"none\" }, "
      "b = { family = \"radial\", profile = \"identity\" }, expect = \"zero\" }]\n");
  ASSERT_TRUE(r.error.has_value());
  EXPECT_EQ(r.error->first, "unbounded_symbol");
  EXPECT_FALSE(r.pass());
  EXPECT_EQ(exit_code(r), 1);
}

// ---------------------------------------------------------------------------
// Command line

#ifdef BERGMAN_CLI_PATH
namespace {

int cli(const std::string& args) {
  const int status = std::system((std::string(BERGMAN_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch("cli");
  const std::string preset = std::string("--config ") + BERGMAN_PRESET_DIR + "/c11_norms.toml";
  EXPECT_EQ(cli(preset), 0);
  EXPECT_EQ(cli(preset + " --format csv --out " + (dir / "r.csv").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "r.csv"));

  std::ofstream(dir / "bad.toml") << "experiment = \"norms\"\n[[cases]]\ndomain = { kind = \"disk\" }\nlambda = 0.5\ncutoff = 2\n";
  EXPECT_EQ(cli("--config " + (dir / "bad.toml").string()), 2);
  EXPECT_EQ(cli("--config " + (dir / "missing.toml").string()), 2);
  EXPECT_EQ(cli("--format yaml --config " + std::string(BERGMAN_PRESET_DIR) + "/c11_norms.toml"), 2);

  std::ofstream(dir / "fail.toml") << "experiment = \"census\"\n[[cases]]\nn = 2\nm = 2\ncutoff = 2\n"
                                      "expect_max_multiplicity = 1\n";
  EXPECT_EQ(cli("--config " + (dir / "fail.toml").string()), 1);
}

TEST(Cli, DiffSubcommand) {
  const fs::path dir = scratch("diff");
  const auto rule = radial_rule(Domain::unit_ball(1), 2.0, 6);
  const auto b = make_basis(Domain::unit_ball(1), 2.0, 4);
  auto t = toeplitz_matrix(b, Symbol::coordinate(0, 0), rule);
  write_text_file((dir / "a.json").string(), canonical_json(to_json(t)));
  t.entries(1, 1) += 1e-3;
  write_text_file((dir / "b.json").string(), canonical_json(to_json(t)));
  const std::string a = (dir / "a.json").string(), bb = (dir / "b.json").string();
  EXPECT_EQ(cli("diff " + a + " " + a), 0);
  EXPECT_EQ(cli("diff " + a + " " + bb + " --tol 1e-6"), 1);
  EXPECT_EQ(cli("diff " + a + " " + bb + " --tol 1e-2"), 0);
}
#endif
