"""
Integrate the population flow with and without feedback and time how long
each trajectory takes to enter the 0.15-ball around its attractor.
"""

import pathlib

import numpy as np

import evoctrl as ec
from evoctrl import measure

DT = 0.01
STEPS = 4000
OUT = pathlib.Path("demo_out")


def main():
    OUT.mkdir(exist_ok=True)
    A = ec.PAYOFF_MATRIX
    x0 = np.asarray(ec.UNIFORM, float)

    traj = ec.integrate(ec.replicator_field(A), x0, DT, STEPS)
    d = np.linalg.norm(traj - np.asarray(ec.NASH_1, float), axis=1)
    print(f"open loop: final distance to the three-strategy equilibrium {d[-1]:.4f}")
    ec.save_trajectory(traj, DT, OUT / "flow_open.csv")

    for b in (-0.8, -0.4, 0.4, 0.8):
        design = ec.design_controller(A, b)
        traj = ec.integrate(ec.closed_loop_field(A, design), x0, DT, STEPS)
        label, target = measure.target_for(b)
        d = np.linalg.norm(traj - target, axis=1)
        k = ec.first_crossing(d, 0.15)
        t = "never" if k is None else f"t={(k - 1) * DT:.2f}"
        print(f"b={b:+.1f}: enters 0.15-ball around {label} at {t}, final d={d[-1]:.4f}")
        ec.save_trajectory(traj, DT, OUT / f"flow_b{b:+.1f}.csv")

    print(f"\ntrajectories written to {OUT}/")


if __name__ == "__main__":
    main()
