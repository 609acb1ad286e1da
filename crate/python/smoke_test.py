"""Smoke test for the tvsetar_py extension module.

Build and install first, e.g. `maturin develop -m crates/python/Cargo.toml`.
"""

import math

import tvsetar_py as tv


def main():
    haar = tv.WaveletBasis("haar")
    assert haar.father(0.3) == 1.0
    assert haar.mother(0.25) == 1.0 and haar.mother(0.75) == -1.0

    model = tv.SetarModel.study("sim1")
    path = model.threshold_path(8)
    assert path == [1.0, 1.0, 1.5, 1.5, 1.5, 1.5, 1.0, 1.0], path

    y = model.simulate(1024, seed=3)
    assert len(y) == 1024
    assert y == model.simulate(1024, seed=3)

    fit = tv.fit_wavelet(y, haar, [2], seed=0)
    est = fit.estimates
    assert len(est) == 5 and all(math.isfinite(v) for v in est)
    assert len(fit.residuals) == 1023
    print("haar fit", [round(v, 3) for v in est], "ssr", round(fit.ssr, 2))

    const = tv.fit_constant(y)
    assert const.ssr >= fit.ssr - 1e-9

    rho = tv.acf(fit.residuals, 10)
    assert len(rho) == 10
    q, df, p = tv.ljung_box(fit.residuals, 20)
    assert df == 20 and 0.0 <= p <= 1.0

    boot = tv.bootstrap(y, fit, b=50, seed=1)
    lo, hi = boot["intervals"]["phi1_low"]
    assert lo <= hi
    assert len(boot["band_lower"]) == 1024

    try:
        tv.fit_constant([1.0])
    except ValueError:
        pass
    else:
        raise AssertionError("a one-point series should be rejected")

    print("smoke test passed")


if __name__ == "__main__":
    main()
