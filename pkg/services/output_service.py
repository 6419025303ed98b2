"""
Result files of one CLI invocation: CSV tables with units, sorted JSON, matplotlib plot scripts,
a metadata file, and a manifest of sha256 checksums.

Data files depend only on the inputs; timestamps go to metadata.json alone.
"""
import csv
import hashlib
import json
import traceback
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Set

import numpy as np

from core.exact_oracle import SpacingHistogram
from logger_config import get_logger
from services.fidelity_service import FidelityReport
from services.records import DepsTable, TimeSeries

logger = get_logger("Output")

SPLITTING_CONVENTIONS = {
    "trotter": "U(dt) = U_even(dt/2) U_odd(dt) U_even(dt/2), second order",
    "even_bonds": "(0,1), (2,3), ...",
    "field_split": "interior site fields shared 1/2 between adjacent bonds, edge sites in full",
    "imaginary_time": "K_j = exp(-h_j tau/2) applied on both sides of the operator",
    "inner_product": "<A|B> = 2^-n tr(A^dagger B)",
    "truncation": "lambda^2 normalized to sum 1, eta = discarded sum, weights <= 1e-28 always cut",
}

PLOT_TEMPLATES = {
    "series": '''
data = np.genfromtxt("{csv}", delimiter=",", skip_header=1)
plt.semilogy(data[:, 0], np.maximum(data[:, 1], 1e-300))
plt.axhline({eps}, color="k", ls="--", lw=0.8)
plt.xlabel("t")
plt.ylabel("eta_tot(t)")
''',
    "deps": '''
data = np.genfromtxt("{csv}", delimiter=",", skip_header=1, usecols=(0, 1))
data = data[~np.isnan(data[:, 1])]
plt.semilogy(data[:, 1], data[:, 0], "o-")
plt.xlabel("t")
plt.ylabel("D_eps(t)")
''',
    "lsd": '''
data = np.genfromtxt("{csv}", delimiter=",", skip_header=1)
centers = 0.5 * (data[:, 0] + data[:, 1])
s = np.linspace(0, centers.max(), 400)
plt.bar(centers, data[:, 2], width=data[:, 1] - data[:, 0], alpha=0.5)
plt.plot(s, np.exp(-s), label="Poisson")
plt.plot(s, 0.5 * np.pi * s * np.exp(-0.25 * np.pi * s ** 2), label="Wigner")
plt.xlabel("s")
plt.ylabel("p(s)")
plt.legend()
''',
    "fidelity": '''
data = np.genfromtxt("{csv}", delimiter=",", skip_header=1)
for d in np.unique(data[:, 0]):
    rows = data[data[:, 0] == d]
    plt.loglog(rows[:, 1], rows[:, 3], label=f"1-F, D={{int(d)}}")
    plt.loglog(rows[:, 1], {c} * rows[:, 2] / {dt}, "--", label=f"c eta_tot/dt, D={{int(d)}}")
plt.xlabel("t")
plt.legend()
''',
}


def _fmt(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class OutputService:
    """
    Writes every result file of a run below one directory and keeps track of them.

    Attributes:
        out_dir (Path): Target directory, created on first use.
        files (List[Path]): Files written so far, in order.
        nondeterministic (Set[str]): Names of files whose content depends on wall time.
    """
    def __init__(self, out_dir: str):
        self.out_dir = Path(out_dir)
        self.files: List[Path] = []
        self.nondeterministic: Set[str] = set()

    def path_for(self, name: str) -> Path:
        """Registers a file below out_dir and returns its path."""
        self.out_dir.mkdir(parents=True, exist_ok=True)
        path = self.out_dir / name
        if path not in self.files:
            self.files.append(path)
        return path

    def write_csv(self, name: str, columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
        """Writes a CSV whose first row names every column with its unit."""
        path = self.path_for(name)
        with path.open("w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_fmt(v) for v in row])
        logger.debug(f"Wrote {path}")
        return path

    def write_json(self, name: str, payload: Dict[str, Any]) -> Path:
        path = self.path_for(name)
        path.write_text(json.dumps(payload, sort_keys=True, indent=2, default=_json_default) + "\n")
        logger.debug(f"Wrote {path}")
        return path

    def write_series(self, name: str, series: TimeSeries, timing: bool = False) -> Path:
        columns = ["t (1/J)", "eta_tot (dimensionless)", "max_bond (count)"]
        if timing:
            columns.append("wall_ms (ms)")
            self.nondeterministic.add(name)
        rows = ((r.t, r.eta_tot, r.max_bond) + ((r.wall_ms,) if timing else ()) for r in series.rows())
        return self.write_csv(name, columns, rows)

    def write_deps(self, name: str, table: DepsTable) -> Path:
        columns = ["D (count)", "t_star (1/J)", "error (text)"]
        return self.write_csv(name, columns, ((r.d, r.t_star, r.error) for r in table.rows))

    def write_histogram(self, name: str, histogram: SpacingHistogram) -> Path:
        columns = ["s_low (mean spacing)", "s_high (mean spacing)", "density (1/mean spacing)"]
        rows = zip(histogram.edges[:-1], histogram.edges[1:], histogram.densities)
        return self.write_csv(name, columns, rows)

    def write_fidelity(self, name: str, report: FidelityReport) -> Path:
        columns = ["D (count)", "t (1/J)", "eta_tot (dimensionless)", "infidelity (dimensionless)"]
        return self.write_csv(name, columns, report.rows)

    def write_plot_script(self, name: str, kind: str, **fields: Any) -> Path:
        """
        Writes a standalone matplotlib script that renders one of the data files.

        Args:
            name (str): Script file name.
            kind (str): "series", "deps", "lsd" or "fidelity".
            **fields: Values substituted into the template, such as csv, eps, c and dt.
        """
        body = PLOT_TEMPLATES[kind].format(**fields)
        script = (f"# Renders {fields.get('csv', 'data')}; run with: python {name}\n"
                  "import matplotlib.pyplot as plt\nimport numpy as np\n" + body
                  + f'plt.tight_layout()\nplt.savefig("{Path(name).stem}.png", dpi=150)\n')
        path = self.path_for(name)
        path.write_text(script)
        return path

    def write_metadata(self, subcommand: str, config: Dict[str, Any], started: datetime,
                       summary: Optional[Dict[str, Any]] = None) -> Path:
        return self.write_json("metadata.json", {
            "subcommand": subcommand,
            "config": config,
            "conventions": SPLITTING_CONVENTIONS,
            "started": started.isoformat(),
            "finished": datetime.now(timezone.utc).isoformat(),
            "summary": summary or {},
        })

    def write_error(self, error: BaseException, context: Optional[Dict[str, Any]] = None) -> Path:
        return self.write_json("error.json", {
            "type": type(error).__name__,
            "message": str(error),
            "field": getattr(error, "field", None),
            "checkpoint_path": getattr(error, "checkpoint_path", None),
            "context": context or {},
            "traceback": traceback.format_exception(type(error), error, error.__traceback__),
        })

    def write_manifest(self) -> Path:
        """
        Lists every file written so far. Only deterministic files carry a sha256 and size, so the
        manifests of identical invocations compare equal.
        """
        entries = []
        for path in self.files:
            if path.name == "manifest.json" or not path.exists():
                continue
            deterministic = path.name not in self.nondeterministic and path.name not in ("metadata.json", "error.json")
            entries.append({
                "file": path.name,
                "sha256": sha256_file(path) if deterministic else None,
                "bytes": path.stat().st_size if deterministic else None,
                "deterministic": deterministic,
            })
        path = self.path_for("manifest.json")
        path.write_text(json.dumps({"files": entries}, sort_keys=True, indent=2) + "\n")
        logger.info(f"Wrote {len(entries)} files and manifest to {self.out_dir}")
        return path


def _json_default(value: Any):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Cannot serialize {type(value).__name__}")
