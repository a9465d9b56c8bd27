"""Smoke test for the routerlab Python extension.

Build and install first:  maturin develop -m crates/py/Cargo.toml
Then run:                 python python/smoke_test.py
"""

import math
import os
import sys
import tempfile

import routerlab


def check(cond, what):
    if not cond:
        print(f"FAIL {what}")
        sys.exit(1)
    print(f"ok   {what}")


def main():
    p = routerlab.Pricing.default()
    check(p.input_ratio() == 13.75 and p.output_ratio() == 13.75, "default pricing ratio")

    check(abs(routerlab.toa([(0.5, 0.5)], (0.0, 0.0), (1.0, 1.0)) - 0.5) < 1e-12, "diagonal area")
    check(routerlab.togr(0.75, 0.75) == 1.0, "golden ratio of itself")
    check(abs(routerlab.weight_of(1.0) - 0.775) < 1e-12, "weight at confidence 1.0")

    votes = [("A", 1.0, 12), ("a", 1.0, 30), (None, 1.0, 5), ("b", 1.0, 40)]
    shares = dict(routerlab.tally(votes))
    check(abs(shares["a"] - 0.5) < 1e-12, "vote share with refusal in denominator")
    answer, latency = routerlab.simulate_parallel(votes, 0.5)
    check(answer == "a" and latency == 30, "early accept")

    dpo, sft, total = routerlab.combined_loss(-3.0, -3.0, -9.0, -9.0, 6)
    check(abs(dpo - math.log(2)) < 1e-12 and abs(total - (dpo + 0.2 * 0.5)) < 1e-12, "combined loss")

    pair = routerlab.build_dpo_pair("q", "Q?", [("short", True, 10), ("long", False, 16)])
    check(pair is not None and pair["rejected"] == "long", "dpo pair above 1.5x")
    check(routerlab.build_dpo_pair("q", "Q?", [("short", True, 10), ("long", False, 15)]) is None,
          "dpo pair at exactly 1.5x is skipped")

    refusal = routerlab.build_refusal_set("q", "What?", 3, ["yes"], seed=1)
    check(len(refusal) == 10, "ten refusal examples")
    check(refusal[0]["prompt"] == "Please respond with a confidence level of 0.1: What?", "prompt prefix")
    check([e["target"] for e in refusal].count(routerlab.REFUSAL_TEMPLATE) == 7, "refusals above accuracy")

    ds = routerlab.Dataset.synthetic(42, 300)
    check(len(ds) == 300, "synthetic dataset size")
    curve = routerlab.sweep_pre(ds, score_source="refusal")
    check(len(curve) == 13 and curve[0]["tau"] == "slm_only", "pre sweep shape")
    points, latency = routerlab.sweep_cascade(ds, scheme="fcv")
    check(len(points) == 13 and len(latency) == 11, "cascade sweep shape")
    report = routerlab.evaluate(ds, policy="cascade", scheme="fcv", assume_perfect=True)
    check(report["mode"] == "perfect" and report["arol"] is not None, "cascade report")

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "q.jsonl")
        ds.write(path)
        again = routerlab.Dataset.load(path)
        check(again.ids() == ds.ids(), "dataset round trip")
        with open(path, "a") as f:
            f.write('{"id":"bad","input_tokens":0,"pre_score":null,"slm_samples":[],"llm":null}\n')
        try:
            routerlab.Dataset.load(path)
            check(False, "invalid line rejected")
        except routerlab.RouterlabError as e:
            check("line 301" in str(e), "invalid line rejected with line number")

    print("smoke test passed")


if __name__ == "__main__":
    main()
