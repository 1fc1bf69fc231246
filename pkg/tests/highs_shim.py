"""External-solver stand-in: solve an MPS file with HiGHS, write ``name value`` lines.

Usage: python highs_shim.py MODEL.mps SOLUTION.txt
"""
import sys

import highspy


def main(mps, sol):
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.readModel(mps)
    h.run()
    status = h.getModelStatus()
    with open(sol, "w") as fh:
        if status == highspy.HighsModelStatus.kInfeasible:
            fh.write("status infeasible\n")
            return 0
        if status != highspy.HighsModelStatus.kOptimal:
            fh.write("status unknown\n")
            return 0
        fh.write("status optimal\n")
        lp = h.getLp()
        values = h.getSolution().col_value
        for name, v in zip(lp.col_names_, values):
            fh.write(f"{name} {v!r}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1], sys.argv[2]))
