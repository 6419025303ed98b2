DEFAULT_GRID = tuple(range(4, 65, 4))

experiments = [
    {
        "name": "lsd",
        "description": "Parity-resolved, unfolded level-spacing distribution of H(hx, hz), compared with the Wigner surmise and the Poisson law.",
        "defaults": {"n": 12, "hx": 0.0, "hz": 2.0, "window": (-9.0, 9.0), "degree": 9, "bins": 40},
        "outputs": ["lsd_histogram.csv", "lsd_spacings.csv", "lsd_report.json", "plot_lsd.py"],
    },
    {
        "name": "evolve",
        "description": "Single Heisenberg-picture run at a fixed bond dimension, recording eta_tot(t).",
        "defaults": {"n": 14, "hx": 1.0, "hz": 1.0, "dt": 0.01, "tmax": 6.0, "dmax": 32, "op": "local:y"},
        "outputs": ["evolve_series.csv", "evolve_summary.json", "plot_evolve.py"],
    },
    {
        "name": "deps",
        "description": "Crossing times t*(D) over a bond-dimension grid, read as D_eps(t), with a growth-law fit.",
        "defaults": {"n": 14, "hx": 1.0, "hz": 1.0, "dt": 0.01, "tmax": 6.0, "op": "local:y", "dgrid": DEFAULT_GRID},
        "outputs": ["deps_table.csv", "deps_summary.json", "fit_report.json", "plot_deps.py"],
    },
    {
        "name": "thermal",
        "description": "Quench from the thermal state of H0 = H(0, 1) to H(hx, hz), profiled like deps.",
        "defaults": {"n": 16, "hx": 1.0, "hz": 1.0, "dt": 0.01, "tmax": 6.0, "beta": 0.01, "eps": 1e-6,
                     "h0": (0.0, 1.0), "dgrid": DEFAULT_GRID},
        "outputs": ["deps_table.csv", "deps_summary.json", "fit_report.json", "plot_deps.py"],
    },
    {
        "name": "fidelity",
        "description": "Infidelity of truncated runs against dense evolution, fitted as 1 - F = c eta_tot / dt.",
        "defaults": {"n": 10, "hx": 0.0, "hz": 2.0, "dt": 0.01, "tmax": 5.0, "op": "local:y",
                     "dgrid": (10, 20, 30, 40), "reference": "exact", "sample_every": 10},
        "outputs": ["fidelity.csv", "fidelity_report.json", "plot_fidelity.py"],
    },
]
