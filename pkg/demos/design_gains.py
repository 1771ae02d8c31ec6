"""
Walk through the controller design chain for every treatment intensity.

Prints the open-loop spectrum at the interior equilibrium, the gain row
for each b, the structural invariants of the gains, and the stability
boundary where the closed-loop leading eigenvalue changes sign.
"""

import numpy as np

import evoctrl as ec


def main():
    A = ec.PAYOFF_MATRIX
    spec = ec.eigs(ec.jacobian(ec.replicator_field(A), np.asarray(ec.NASH_1, float)))
    print("open-loop spectrum at the interior equilibrium:")
    for lam in spec.eigenvalues:
        print(f"  {lam.real:+.6f} {lam.imag:+.6f}i")

    print("\ngain rows (k1..k5), target shift b on the complex pair:")
    for b in (-0.8, -0.4, 0.0, 0.4, 0.8):
        d = ec.design_controller(A, b)
        row = "  ".join(f"{k:+.4f}" for k in d.K)
        print(f"  b={b:+.1f}   {row}")
        # structural checks: k1+k2+k3 = 0 and k4+k5 = 2b
        assert abs(d.K[:3].sum()) < 1e-9
        assert abs(d.K[3:].sum() - 2 * b) < 1e-9

    d = ec.design_controller(A, -0.8)
    Jc = ec.closed_loop_jacobian(
        ec.jacobian(ec.replicator_field(A), np.asarray(d.anchor, float)), d.B, d.K)
    achieved = ec.eigs(Jc).eigenvalues
    print("\nclosed-loop spectrum at b=-0.8 (achieved vs target):")
    lam_t = np.asarray(d.lambda_target)
    want_sorted = lam_t[np.lexsort((-lam_t.imag, -lam_t.real))]
    for got, want in zip(achieved, want_sorted):
        print(f"  {got.real:+.6f}{got.imag:+.6f}i   <-   {want.real:+.6f}{want.imag:+.6f}i")

    bstar = ec.stability_boundary(A)
    print(f"\nleading real part crosses zero at b* = {bstar:.4f}")
    for b in (0.3, bstar, 0.4):
        print(f"  max Re(lambda) at b={b:+.4f}: {ec.closed_loop_max_real(A, b):+.5f}")


if __name__ == "__main__":
    main()
