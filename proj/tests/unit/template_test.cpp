#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "support.hpp"
#include "viewguard/errors.hpp"

using namespace viewguard;
using namespace viewguard::testing;
using namespace std::chrono_literals;

namespace {

Trace calendar_trace(std::int64_t uid = 1, std::int64_t eid = 42) {
  return expand(observe(*calendar_policy(),
                        {{"SELECT * FROM Users WHERE UId = " + std::to_string(uid), {row({I(uid), S("John Doe")})}},
                         {"SELECT * FROM Attendances WHERE UId = " + std::to_string(uid) +
                              " AND EId = " + std::to_string(eid),
                          {row({I(uid), I(eid), S("05/04 1pm")})}}}));
}

BasicQuery events_query(std::int64_t eid) {
  return calendar_policy()->parse_basic("SELECT * FROM Events WHERE EId = " + std::to_string(eid));
}

Term x(int id) { return Variable{id, ColumnType::Int}; }
Term my_uid() { return ContextParam{"MyUId", ColumnType::Int}; }

std::set<std::string> names(const std::vector<Atom>& atoms) {
  std::set<std::string> out;
  for (const auto& a : atoms) out.insert(to_string(a));
  return out;
}

class Templates : public ::testing::Test {
 protected:
  void SetUp() override {
    if (!solver_available()) GTEST_SKIP() << "z3 not on PATH";
  }

  static const DecisionTemplate& calendar_template(TemplateReport* report = nullptr) {
    static TemplateReport rep;
    static DecisionTemplate t = [] {
      const auto& p = *calendar_policy();
      return generate_template(events_query(42), calendar_trace(), ctx_of(p, {{"MyUId", 1}}), p, TemplateSettings{},
                               &rep);
    }();
    if (report) *report = rep;
    return t;
  }
};

std::string smt_term(const Term& t) {
  if (const auto* v = std::get_if<Variable>(&t)) return "x" + std::to_string(v->id);
  if (const auto* c = std::get_if<ContextParam>(&t)) return c->name;
  return "lit_" + std::to_string(std::get<Value>(t).int_value());
}

std::string smt_atom(const Atom& a) {
  auto l = smt_term(a.lhs);
  switch (a.kind) {
    case Atom::Kind::IsNull: return "(= " + l + " null)";
    case Atom::Kind::Eq: return "(and (= " + l + " " + smt_term(a.rhs) + ") (not (= " + l + " null)))";
    case Atom::Kind::EqVars: return "(and (= " + l + " " + smt_term(a.rhs) + ") (not (= " + l + " null)))";
    case Atom::Kind::Lt: return "(lt " + l + " " + smt_term(a.rhs) + ")";
  }
  return "";
}

// Whether `core` entails `goal` over integers with a distinguished NULL.
bool entailed_by_solver(const std::vector<Atom>& core, const Atom& goal, int vars, const std::vector<int>& lits) {
  smt::SmtScript s;
  s.logic = "UF";
  s.want_core = false;
  s.declarations.push_back("(declare-sort V 0)");
  s.declarations.push_back("(declare-const null V)");
  s.declarations.push_back("(declare-const MyUId V)");
  s.declarations.push_back("(declare-fun lt (V V) Bool)");
  for (int i = 0; i < vars; ++i) s.declarations.push_back("(declare-const x" + std::to_string(i) + " V)");
  std::string distinct = "null";
  for (int l : lits) {
    s.declarations.push_back("(declare-const lit_" + std::to_string(l) + " V)");
    distinct += " lit_" + std::to_string(l);
  }
  s.assertions.push_back("(distinct " + distinct + ")");
  s.assertions.push_back("(forall ((a V)) (not (lt a a)))");
  s.assertions.push_back("(forall ((a V) (b V) (c V)) (=> (and (lt a b) (lt b c)) (lt a c)))");
  s.assertions.push_back("(forall ((a V)) (and (not (lt a null)) (not (lt null a))))");
  for (int a : lits)
    for (int b : lits)
      s.assertions.push_back(std::string(a < b ? "" : "(not ") + "(lt lit_" + std::to_string(a) + " lit_" +
                             std::to_string(b) + ")" + (a < b ? "" : ")"));
  for (const auto& a : core) s.assertions.push_back(smt_atom(a));
  s.assertions.push_back("(not " + smt_atom(goal) + ")");
  auto out = solve(s, default_solvers(), 10s);
  EXPECT_NE(out.kind, SolverOutcome::Kind::Unknown) << out.reason;
  return out.unsat();
}

}  // namespace

TEST_F(Templates, CalendarPipelineIntermediates) {
  TemplateReport r;
  const auto& t = calendar_template(&r);
  EXPECT_EQ(r.minimal_trace, std::vector<std::size_t>{1});
  EXPECT_EQ(names(r.core), (std::set<std::string>{"MyUId = x0", "x1 = 42", "x3 = 42"}));
  EXPECT_EQ(names(r.augmented), (std::set<std::string>{"MyUId = x0", "x1 = 42", "x3 = 42", "x1 = x3"}));
  EXPECT_EQ(names(r.smallest), (std::set<std::string>{"MyUId = x0", "x1 = x3"}));
  EXPECT_TRUE(t.verified);
  EXPECT_EQ(t.premises.size(), 1u);
  EXPECT_TRUE(t.condition.empty());
}

TEST_F(Templates, CalendarTemplateRendering) {
  const auto& p = *calendar_policy();
  const auto& t = calendar_template();
  EXPECT_EQ(render_template(p.schema(), t),
            "(?MyUId, ?0, *) in SELECT * FROM Attendances WHERE UId = ?MyUId AND EId = ?0\n"
            "--------\n"
            "SELECT * FROM Events WHERE EId = ?0\n");
  auto j = template_to_json(p.schema(), t);
  EXPECT_EQ(j["query"], "SELECT * FROM Events WHERE EId = ?0");
  auto back = template_from_json(j, p);
  EXPECT_EQ(back, t);
  EXPECT_TRUE(back.verified);
  EXPECT_EQ(template_to_json(p.schema(), back), j);
}

TEST_F(Templates, CalendarTemplateMatchesOtherUsersAndEvents) {
  const auto& p = *calendar_policy();
  const auto& t = calendar_template();
  auto nu = match_template(t, events_query(77), calendar_trace(9, 77), ctx_of(p, {{"MyUId", 9}}));
  ASSERT_TRUE(nu);
  EXPECT_EQ(nu->vars.at(0), I(77));
  EXPECT_FALSE(match_template(t, events_query(77), calendar_trace(9, 77), ctx_of(p, {{"MyUId", 8}})));
  EXPECT_FALSE(match_template(t, events_query(78), calendar_trace(9, 77), ctx_of(p, {{"MyUId", 9}})));
  EXPECT_FALSE(match_template(t, events_query(77), {}, ctx_of(p, {{"MyUId", 9}})));
}

TEST_F(Templates, FoldingPreservesMatching) {
  const auto& p = *calendar_policy();
  TemplateReport r;
  const auto& folded = calendar_template(&r);
  struct Case {
    std::int64_t me, uid, eid, query;
  };
  for (const auto& c : {Case{1, 1, 42, 42}, Case{9, 9, 77, 77}, Case{9, 8, 77, 77}, Case{9, 9, 77, 76}}) {
    auto ctx = ctx_of(p, {{"MyUId", c.me}});
    auto trace = calendar_trace(c.uid, c.eid);
    EXPECT_EQ(match_template(folded, events_query(c.query), trace, ctx).has_value(),
              match_template(r.unfolded, events_query(c.query), trace, ctx).has_value());
  }
}

TEST_F(Templates, SoundnessScript) {
  const auto& p = *calendar_policy();
  auto t = calendar_template();
  EXPECT_TRUE(solve(encode_template_soundness(t, p), default_solvers(), 10s).unsat());
  auto no_premise = t;
  no_premise.premises.clear();
  EXPECT_TRUE(solve(encode_template_soundness(no_premise, p), default_solvers(), 10s).sat());
  auto contradictory = no_premise;
  contradictory.condition = {Atom::eq(x(0), I(1)), Atom::eq(x(0), I(2))};
  EXPECT_TRUE(solve(encode_template_soundness(contradictory, p), default_solvers(), 10s).unsat());
}

TEST_F(Templates, UnconditionalJoinNeedsNoPremise) {
  const auto& p = *calendar_policy();
  auto q = p.parse_basic("SELECT e.EId, e.Title FROM Events e, Attendances a WHERE e.EId = a.EId AND a.UId = 1");
  auto t = generate_template(q, calendar_trace(), ctx_of(p, {{"MyUId", 1}}), p, TemplateSettings{});
  EXPECT_TRUE(t.premises.empty());
  EXPECT_TRUE(match_template(t, p.parse_basic("SELECT e.EId, e.Title FROM Events e, Attendances a WHERE e.EId = "
                                              "a.EId AND a.UId = 4"),
                             {}, ctx_of(p, {{"MyUId", 4}})));
  EXPECT_FALSE(match_template(t, p.parse_basic("SELECT e.EId, e.Title FROM Events e, Attendances a WHERE e.EId = "
                                               "a.EId AND a.UId = 4"),
                              {}, ctx_of(p, {{"MyUId", 5}})));
}

TEST_F(Templates, MinimizeDropsRedundantEntries) {
  const auto& p = *calendar_policy();
  auto trace = calendar_trace();
  auto dup = trace;
  dup.push_back(trace[1]);
  dup.back().origin = 2;
  auto more = expand(observe(p, {{"SELECT * FROM Events WHERE EId = 7", {row({I(7), S("t"), I(3)})}}}));
  dup.push_back(more[0]);
  dup.back().origin = 3;
  auto keep = minimize_trace(events_query(42), dup, p, ctx_of(p, {{"MyUId", 1}}), TemplateSettings{});
  ASSERT_EQ(keep.size(), 1u);
  EXPECT_TRUE(keep[0] == 1 || keep[0] == 2);
}

TEST_F(Templates, NonCompliantQueryHasNoTemplate) {
  const auto& p = *calendar_policy();
  EXPECT_THROW(generate_template(events_query(5), {}, ctx_of(p, {{"MyUId", 1}}), p, TemplateSettings{}), Error);
}

TEST_F(Templates, RandomCompliantInstancesYieldSelfMatchingTemplates) {
  InstanceGenerator gen(71);
  int generated = 0;
  for (int i = 0; i < 80 && generated < 12; ++i) {
    auto inst = gen.next();
    auto trace = expand(inst.trace);
    if (!solver_verdict(*inst.policy, inst.ctx, trace, inst.query).unsat()) continue;
    DecisionTemplate t;
    try {
      t = generate_template(inst.query, trace, inst.ctx, *inst.policy, TemplateSettings{});
    } catch (const NoTemplate&) {
      continue;
    }
    ++generated;
    EXPECT_TRUE(t.verified);
    EXPECT_TRUE(match_template(t, inst.query, trace, inst.ctx)) << inst.describe();
    EXPECT_EQ(canonicalize(t), t);
    EXPECT_EQ(template_from_json(template_to_json(inst.policy->schema(), t), *inst.policy), t);
  }
  EXPECT_GT(generated, 3);
}

TEST(Candidates, NullValuesOnlyYieldIsNull) {
  Valuation nu;
  nu.vars = {{0, Value::null(ColumnType::Int)}, {1, Value::null(ColumnType::Int)}};
  auto atoms = candidate_atoms(nu, {});
  EXPECT_EQ(names(atoms), (std::set<std::string>{"x0 IS NULL", "x1 IS NULL"}));
}

TEST(Candidates, AllCandidatesHoldUnderTheValuation) {
  std::mt19937 rng(5);
  for (int round = 0; round < 100; ++round) {
    Valuation nu;
    nu.ctx["MyUId"] = I(rng() % 3);
    for (int v = 0; v < 4; ++v) nu.vars[v] = rng() % 4 == 0 ? Value::null(ColumnType::Int) : I(rng() % 3);
    auto atoms = candidate_atoms(nu, {ContextParam{"MyUId", ColumnType::Int}});
    for (const auto& a : atoms) EXPECT_TRUE(holds(a, [&](const Term& t) { return nu.of(t); })) << to_string(a);
    auto family = [](const Atom& a) { return a.kind == Atom::Kind::IsNull ? 0 : static_cast<int>(a.kind); };
    EXPECT_TRUE(std::is_sorted(atoms.begin(), atoms.end(),
                               [&](const Atom& l, const Atom& r) { return family(l) < family(r); }));
  }
}

TEST(Augment, Examples) {
  auto eq = Atom::eq_vars(x(1), x(3));
  EXPECT_EQ(augment({Atom::eq(x(1), I(42)), Atom::eq(x(3), I(42))}, {eq}), std::vector<Atom>{eq});
  EXPECT_TRUE(implies({Atom::eq_vars(x(0), x(1)), Atom::eq_vars(x(1), x(2))}, Atom::eq_vars(x(0), x(2))));
  EXPECT_TRUE(implies({Atom::lt(x(0), x(1)), Atom::lt(x(1), x(2))}, Atom::lt(x(0), x(2))));
  EXPECT_TRUE(implies({Atom::eq(my_uid(), I(3)), Atom::eq_vars(my_uid(), x(0))}, Atom::eq(x(0), I(3))));
  EXPECT_FALSE(implies({Atom::eq(x(0), I(1))}, Atom::eq(x(1), I(1))));
  EXPECT_FALSE(implies({Atom::lt(x(0), x(1))}, Atom::lt(x(1), x(0))));
  EXPECT_TRUE(augment({}, {eq, Atom::is_null(x(0))}).empty());
}

class AugmentSolver : public ::testing::Test {
 protected:
  void SetUp() override {
    if (!solver_available()) GTEST_SKIP() << "z3 not on PATH";
  }
};

TEST_F(AugmentSolver, AgreesWithSolverOnRandomAtomSets) {
  std::mt19937 rng(13);
  const std::vector<int> lits{0, 1, 2};
  for (int round = 0; round < 100; ++round) {
    Valuation nu;
    nu.ctx["MyUId"] = I(rng() % 3);
    for (int v = 0; v < 3; ++v) nu.vars[v] = rng() % 5 == 0 ? Value::null(ColumnType::Int) : I(rng() % 3);
    auto all = candidate_atoms(nu, {ContextParam{"MyUId", ColumnType::Int}});
    std::vector<Atom> core;
    for (const auto& a : all)
      if (rng() % 4 == 0) core.push_back(a);
    bool equational_core =
        std::none_of(core.begin(), core.end(), [](const Atom& a) { return a.kind == Atom::Kind::Lt; });
    auto derived = augment(core, all);
    for (const auto& goal : all) {
      bool in_derived = std::find(derived.begin(), derived.end(), goal) != derived.end();
      if (!in_derived && !(equational_core && goal.kind != Atom::Kind::Lt)) continue;
      bool entailed = entailed_by_solver(core, goal, 3, lits);
      EXPECT_EQ(entailed, in_derived) << (in_derived ? "unsound: " : "missed: ") << to_string(goal);
    }
  }
}
