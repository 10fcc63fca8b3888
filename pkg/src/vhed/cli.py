"""``vhed`` command line.

    vhed <subcommand> --config run.yaml [--out DIR] [--workers N] [--verbose]

Exit codes: 0 success, 1 configuration error, 2 compute failure,
3 verification failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import io, plotting
from .beltrami import SolverError
from .config import ConfigError, RunConfig, dump_config, load_config
from .pipeline import (StageError, calibrate, full_sinograms, neumann_sinograms,
                       phantom_curves, phantom_mu, reconstruct, sinograms_from_cubes)
from .singpred import ladder, peak_detect
from .spectral import SpectralCube, Sinogram, boundary_points

log = logging.getLogger("vhed")

EXIT_OK, EXIT_CONFIG, EXIT_COMPUTE, EXIT_VERIFY = 0, 1, 2, 3


class Run:
    """Config plus output directory; writes every artifact in the configured formats."""

    def __init__(self, cfg: RunConfig, out: Path):
        self.cfg = cfg
        self.out = out
        self.formats = set(cfg.outputs.formats)
        out.mkdir(parents=True, exist_ok=True)
        dump_config(cfg, out / "config.snapshot.yaml")
        self._constant = None

    @property
    def constant(self) -> complex:
        if self._constant is None:
            cal = self.cfg.averaging.calibration
            if cal == "calibrate":
                g = self.cfg.grid
                c = calibrate(g.side_half, g.exponent, self.cfg.kgrid_obj(), self.cfg.boundary.n_b,
                              self.cfg.workers)
                log.info("calibrated constant %s", c)
                (self.out / "calibration.txt").write_text(f"{c.real!r} {c.imag!r}\n")
                self._constant = c
            else:
                self._constant = complex(cal)
        return self._constant

    def meta(self, **extra) -> dict:
        m = {"phantom": self.cfg.phantom.name, "grid": [self.cfg.grid.side_half,
                                                        self.cfg.grid.exponent]}
        m.update(extra)
        return m

    def save_field(self, name: str, field, render=None):
        g = field.grid
        ax = [("y", g.axis[0], g.axis[-1]), ("x", g.axis[0], g.axis[-1])]
        if "vhed" in self.formats:
            io.write_array(self.out / f"{name}.vhed", field.values, ax, self.meta(kind=name),
                           self._constant)
        if "csv" in self.formats:
            io.export_csv(self.out / f"{name}.csv", io.field_columns(field))
        if "pgm" in self.formats:
            io.export_image(field.values, self.out / f"{name}.pgm",
                            render or self.cfg.outputs.render)
        if "png" in self.formats:
            plotting.field_figure(field, self.out / f"{name}.png", name, render or "real")

    def save_sinogram(self, name: str, sino: Sinogram, overlay=None):
        ax = [("t", sino.t[0], sino.t[-1]), ("phi", sino.phi[0], sino.phi[-1])]
        if "vhed" in self.formats:
            io.write_array(self.out / f"{name}.vhed", sino.values, ax,
                           self.meta(kind=name, sign=sino.sign, provenance=sino.provenance),
                           self.constant)
        if "csv" in self.formats:
            io.export_csv(self.out / f"{name}.csv", io.sinogram_columns(sino))
        if "pgm" in self.formats:
            io.export_image(sino.values, self.out / f"{name}.pgm", "abs")
        if "png" in self.formats:
            plotting.sinogram_figure(sino, self.out / f"{name}.png", name, overlay)

    def save_cube(self, name: str, cube: SpectralCube):
        ax = [("boundary", 0, cube.z_b.size - 1), ("tau", cube.axis[0], cube.axis[-1]),
              ("phi", cube.phi[0], cube.phi[-1])]
        io.write_array(self.out / f"{name}.vhed", cube.values, ax,
                       self.meta(kind="cube", sign=cube.sign, domain=cube.domain))

    def load_cube(self, name: str) -> SpectralCube:
        kg = self.cfg.kgrid_obj()
        arr = io.read_array(self.out / f"{name}.vhed", expect_dtype=np.complex128)
        if arr.data.shape != (self.cfg.boundary.n_b, kg.n_tau, kg.n_phi):
            raise StageError("sweep", f"stored cube {name} has shape {arr.data.shape}, "
                             "which does not match the config")
        return SpectralCube(arr.data, boundary_points(self.cfg.boundary.n_b), kg.tau, kg.phi,
                            "tau", arr.metadata.get("sign", name[-1]))


def _mu(run: Run):
    g = run.cfg.grid
    return phantom_mu(run.cfg.phantom_spec(), g.side_half, g.exponent)


def cmd_phantom(run: Run) -> int:
    sigma, mu, eps = _mu(run)
    log.info("phantom %s: min sigma %.3f, max sigma %.3f, 1 - max|mu| = %.3f",
             run.cfg.phantom.name, sigma.values.real.min(), sigma.values.real.max(), eps)
    run.save_field("sigma", sigma, "real")
    run.save_field("mu", mu, "real")
    return EXIT_OK


def _sweep(run: Run):
    _, mu, _ = _mu(run)
    cubes, sinos = full_sinograms(mu, run.cfg.kgrid_obj(), run.cfg.boundary.n_b,
                                  run.cfg.solver_settings(), run.cfg.workers,
                                  run.cfg.averaging.weight)
    return cubes, sinos


def cmd_sweep(run: Run) -> int:
    cubes, _ = _sweep(run)
    for tag, cube in cubes.items():
        run.save_cube(f"cube{'_plus' if tag == '+' else '_minus'}", cube)
        its = cube.stats["iterations"]
        io.export_csv(run.out / f"iterations{'_plus' if tag == '+' else '_minus'}.csv",
                      {"tau": np.repeat(cube.axis, its.shape[1]),
                       "phi": np.tile(cube.phi, its.shape[0]), "iterations": its})
    return EXIT_OK


def _sinograms(run: Run):
    """Reuse stored cubes when present, otherwise sweep."""
    if (run.out / "cube_plus.vhed").exists() and (run.out / "cube_minus.vhed").exists():
        cubes = {"+": run.load_cube("cube_plus"), "-": run.load_cube("cube_minus")}
        log.info("using stored cubes in %s", run.out)
        return sinograms_from_cubes(cubes, run.cfg.kgrid_obj(), run.cfg.averaging.weight)
    return _sweep(run)[1]


def cmd_sinogram(run: Run) -> int:
    sinos = _sinograms(run)
    for name in ("plus", "minus", "odd", "even"):
        run.save_sinogram(f"sino_{name}", getattr(sinos, name))
    marks = peak_detect(sinos.odd, 0.0, 0.1)
    io.export_csv(run.out / "peaks_phi0.csv", {"t": np.array(marks, float)})
    if "png" in run.formats:
        plotting.column_figure({"plus": sinos.plus, "odd": sinos.odd, "even": sinos.even}, 0.0,
                               run.out / "columns_phi0.png", "phi = 0", marks)
    log.info("odd sinogram peaks at phi=0: %s", [round(t, 4) for t in marks])
    return EXIT_OK


def cmd_reconstruct(run: Run) -> int:
    sigma, _, _ = _mu(run)
    sinos = _sinograms(run)
    rec = reconstruct(sinos.odd, sigma.grid, run.constant, run.cfg.reconstruction.route)
    fields = {"sigma": sigma}
    if "fbp" in rec:
        mu_rec, sigma_rec = rec["fbp"]
        run.save_field("mu_fbp", mu_rec)
        run.save_field("sigma_fbp", sigma_rec)
        fields["sigma_fbp"] = sigma_rec
    if "lambda" in rec:
        run.save_field("lambda", rec["lambda"])
    if "png" in run.formats:
        plotting.profile_figure(fields, run.out / "profile.png", "profile along the x axis")
    return EXIT_OK


def cmd_neumann(run: Run) -> int:
    _, mu, _ = _mu(run)
    N = run.cfg.neumann.N
    kg = run.cfg.kgrid_obj()
    terms = neumann_sinograms(mu, kg, run.cfg.boundary.n_b, N, (1, -1), run.cfg.workers,
                              run.cfg.averaging.weight)
    curves = phantom_curves(run.cfg.phantom_spec())
    rows = {"n": [], "phi": [], "t": [], "amplitude": []}
    for n in range(1, N + 1):
        sino = terms[("+", n)]
        orders = [m for m in range(n + 1) if (n - m) % 2 == 0 and m <= 5]
        lad = ladder(curves, orders, kg.phi, kg.dt / 4) if curves else None
        run.save_sinogram(f"term{n}_plus", sino, lad)
        run.save_sinogram(f"term{n}_minus", terms[("-", n)])
        for j, ph in enumerate(kg.phi):
            col = np.abs(sino.values[:, j])
            for t in peak_detect(sino, ph, 0.1):
                rows["n"].append(n)
                rows["phi"].append(ph)
                rows["t"].append(t)
                rows["amplitude"].append(col[np.argmin(np.abs(kg.t - t))])
    io.export_csv(run.out / "term_peaks.csv", {k: np.array(v) for k, v in rows.items()})
    return EXIT_OK


def cmd_predict(run: Run) -> int:
    kg = run.cfg.kgrid_obj()
    curves = phantom_curves(run.cfg.phantom_spec())
    if not curves:
        raise StageError("predict", "the phantom has no jump interfaces")
    lad = ladder(curves, run.cfg.predict.orders, kg.phi, kg.dt / 4)
    rows = {"m": [], "phi": [], "t": []}
    for m in lad.orders:
        for j, ph in enumerate(lad.phi):
            for t in lad.at(m, j):
                rows["m"].append(m)
                rows["phi"].append(ph)
                rows["t"].append(t)
    io.export_csv(run.out / "ladders.csv", {k: np.array(v) for k, v in rows.items()})
    if "png" in run.formats:
        blank = Sinogram(np.zeros((kg.n_tau, kg.n_phi)), kg.t, kg.phi)
        stored = run.out / "sino_odd.vhed"
        if stored.exists():
            blank.values = io.read_array(stored).data
        plotting.sinogram_figure(blank, run.out / "ladders.png", "predicted ladders", lad)
    return EXIT_OK


def cmd_verify(run: Run) -> int:
    from .verify import AcceptanceContext, run_all

    cfg = run.cfg
    ctx = AcceptanceContext(cfg.grid.side_half, cfg.grid.exponent, cfg.kgrid_obj(),
                            cfg.boundary.n_b, cfg.workers, run.constant)
    results = run_all(ctx)
    lines = [r.line() for r in results]
    for line in lines:
        print(line)
    (run.out / "verify.txt").write_text("\n".join(lines) + "\n")
    io.export_csv(run.out / "verify.csv", {"criterion": np.array([r.number for r in results]),
                                           "passed": np.array([int(r.passed) for r in results])})
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


COMMANDS = {
    "phantom": cmd_phantom,
    "sweep": cmd_sweep,
    "sinogram": cmd_sinogram,
    "reconstruct": cmd_reconstruct,
    "neumann": cmd_neumann,
    "predict": cmd_predict,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vhed", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--out", type=Path, default=None, help="output directory (overrides config)")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--verbose", "-v", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    if not args.verbose:
        logging.getLogger("vhed.beltrami").setLevel(logging.INFO)
        logging.getLogger("matplotlib").setLevel(logging.WARNING)
    try:
        cfg = load_config(args.config)
        if args.workers is not None:
            if args.workers < 1:
                raise ConfigError("--workers must be >= 1")
            cfg.workers = args.workers
        out = args.out or Path(cfg.outputs.directory)
        run = Run(cfg, out)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](run)
    except StageError as exc:
        log.error("%s", exc)
        return EXIT_COMPUTE
    except (SolverError, FloatingPointError, ValueError, OSError, io.ArrayFileError) as exc:
        log.error("[%s] %s: %s", args.command, type(exc).__name__, exc)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
