"""Evaluate the three scripted states and show how the chaser handles the same deletions."""

from setchase.adversaries import SCRIPTS, evaluate_script
from setchase.chaser import DistortedChaser
from setchase.engine import replay


def main():
    for name, make in SCRIPTS.items():
        case = make()
        r = evaluate_script(case)
        if name == "fig2b":
            print(f"{name:8s} ratio violated after deletion: {r.flag}")
        else:
            print(f"{name:8s} potential {r.before:.6f} -> {r.after:.6f}  (delta {r.delta:+.7f})")
        pol = DistortedChaser()
        tr, res = replay(case.ops, pol)
        last = pol.ledger[-1]
        print(f"{'':8s} chaser: cost {last.cost_distorted:.4f}, refined dPhi {last.delta_phi:+.4f}, "
              f"audit ok={pol.report.ok}")


if __name__ == "__main__":
    main()
