# Build a small disjunctive design model by hand and poke at it:
# validation, interval enclosures, and the JSON round trip.

from gdpkit import (
    Constraint,
    Disjunct,
    Disjunction,
    Expression,
    GdpModel,
    LogicClause,
    interval_eval,
    load_model,
    save_model,
)

# One optional processing unit. While it is on, a concave price curve
# links throughput to cost; while it is off, the throughput is zero.
m = GdpModel(sense="min")
flow = m.add_variable("flow", 0.0, 32.0)
cost = m.add_variable("cost", 0.0, 200.0)
m.objective.add_linear(1.0, cost)

price = Expression().add_linear(1.0, cost).add_power(-3.0, flow, 0.7)
on = Disjunct("on",
              [Constraint(price, "=", 10.0, "price"),
               Constraint(Expression().add_linear(1.0, flow), ">=", 2.0, "min_run")],
              fix_to_zero=[flow])
off = Disjunct("off", [Constraint(Expression().add_linear(1.0, cost),
                                  "=", 0.0, "idle")])
m.add_disjunction(Disjunction([on, off], "unit"))
m.add_logic(LogicClause([("on", True), ("off", True)]))

report = m.validate()
print("validation problems:", report.problems or "none")

# Interval arithmetic gives sound enclosures over any sub-box.
lo, hi = m.bounds_arrays()
print("price body over the full box:", interval_eval(price, lo, hi))
print("3*flow^0.7 peaks at 3*32^0.7 =", 3 * 32**0.7)

# Shrinking the box can only shrink the enclosure.
lo2, hi2 = list(lo), list(hi)
lo2[flow], hi2[flow] = 1.0, 8.0
print("price body over flow in [1, 8]:", interval_eval(price, lo2, hi2))

# Models serialize to JSON and round-trip byte for byte.
text = save_model(m)
print("serialized model is", len(text), "bytes;",
      "round trip identical:", save_model(load_model(text)) == text)
