"""Pump population and nonlinearity measure against input power for several f/g ratios."""

import argparse

import numpy as np

from crosskerr import example_params, nonlinearity_measure, normalize, solve_pump


def sweep(ratio, powers):
    base = example_params()
    sp = base.__class__(base.omega, base.Omega, base.f / ratio, base.f, base.kappa,
                        base.Gamma_loss, base.eta, base.P_op)
    rows = []
    for P in powers:
        p = normalize(sp.with_power(float(P)))
        ss = solve_pump(p)
        rows.append((ratio, P, p.xi, ss.n_bar, ss.m_bar, nonlinearity_measure(ss)))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ratios", type=float, nargs="+", default=[313.0, 500.0, 1000.0])
    ap.add_argument("--pmin", type=float, default=4e-18)
    ap.add_argument("--pmax", type=float, default=4e-15)
    ap.add_argument("--points", type=int, default=60)
    ap.add_argument("--out", default="sweep_power.csv")
    args = ap.parse_args()

    powers = np.geomspace(args.pmin, args.pmax, args.points)
    rows = [r for ratio in args.ratios for r in sweep(ratio, powers)]
    np.savetxt(args.out, np.array(rows), delimiter=",",
               header="ratio,P_op,xi,n_bar,m_bar,measure", comments="")
    for ratio in args.ratios:
        last = [r for r in rows if r[0] == ratio][-1]
        print(f"f/g = {ratio:g}: n_bar = {last[3]:.4g}, m_bar = {last[4]:.4g}, "
              f"measure = {last[5]:.4g} at P = {last[1]:.3g} W")


if __name__ == "__main__":
    main()
