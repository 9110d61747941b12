# Flatten a disjunctive model into plain rows: indicator binaries,
# big-M relaxed constraints, fix-to-zero rows and logic covering rows.

from gdpkit import (
    Constraint,
    Disjunct,
    Disjunction,
    Expression,
    GdpModel,
    LogicClause,
    bigm_transform,
    compute_bigm,
)

m = GdpModel(sense="min")
x = m.add_variable("x", 0.0, 10.0)
m.objective.add_linear(1.0, x)

# select: x <= 4 must hold; deselect: x is forced to zero
select = Disjunct("pick", [Constraint(Expression().add_linear(1.0, x),
                                      "<=", 4.0, "cap")], fix_to_zero=[x])
m.add_disjunction(Disjunction([select, Disjunct("skip")], "unit"))
m.add_logic(LogicClause([("pick", True), ("skip", True)]))

# The relaxation constant comes from interval arithmetic: for x <= 4
# over [0, 10] the worst violation is 6, so M = 6.
row = Constraint(Expression(-4.0).add_linear(1.0, x), "<=", 0.0, "cap")
print("M for x - 4 <= 0 over [0, 10]:", compute_bigm(row, [0.0], [10.0]))

flat = bigm_transform(m)
print("\nflattened rows:")
for c, p in zip(flat.constraints, flat.provenance):
    terms = " + ".join(f"{coef:g}*{flat.variables[v].name}"
                       for coef, v in c.body.linear)
    print(f"  [{p['kind']:11s}] {terms} {c.sense} {c.rhs - c.body.constant:g}"
          f"   ({c.label})")

print("\nbinaries:", {g: flat.variables[i].name
                      for g, i in flat.binary_of_guard.items()})
print("size summary:", flat.counts())
