#!/usr/bin/env python3
"""Smoke test for the slicelab Python module.

Builds nothing itself: run `cargo build -p slicelab-py` (or --release)
first. The script locates the compiled cdylib, exposes it under the
importable name `slicelab`, and exercises every binding against closed
forms.  Pass --suite to also run the quick verification matrix (~2 min).
"""

import argparse
import json
import math
import shutil
import sys
import sysconfig
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def stage_module() -> Path:
    """Copy the newest built cdylib next to this script as slicelab.so."""
    candidates = [
        REPO / "target" / "release" / "libslicelab.so",
        REPO / "target" / "debug" / "libslicelab.so",
    ]
    built = [p for p in candidates if p.exists()]
    if not built:
        sys.exit(
            "no compiled module found; run  cargo build -p slicelab-py --release  first"
        )
    src = max(built, key=lambda p: p.stat().st_mtime)
    stage = REPO / "python" / "_build"
    stage.mkdir(exist_ok=True)
    ext = sysconfig.get_config_var("EXT_SUFFIX") or ".so"
    dst = stage / f"slicelab{ext}"
    if not dst.exists() or dst.stat().st_mtime < src.stat().st_mtime:
        shutil.copy2(src, dst)
    return stage


CHECKS = 0


def check(label, ok, detail=""):
    global CHECKS
    CHECKS += 1
    if not ok:
        sys.exit(f"FAIL {label} {detail}")
    print(f"ok  {label}")


def close(a, b, rel=1e-3):
    return abs(a - b) <= rel * max(1.0, abs(b))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--suite", action="store_true", help="also run the quick verification matrix")
    args = ap.parse_args()

    sys.path.insert(0, str(stage_module()))
    import slicelab as sb

    print(f"slicelab {sb.__version__} loaded from {sb.__file__}")

    # gauges and volumes -----------------------------------------------------
    cube = sb.StarBody.cube(3, 1.0)
    check("cube dim", cube.dim() == 3)
    check("cube gauge corner", close(cube.gauge([1.0, 1.0, 1.0]), 1.0, 1e-12))
    check("cube radial axis", close(cube.radial([1.0, 0.0, 0.0]), 1.0, 1e-12))
    check("cube exact volume", cube.exact_volume() == 8.0)
    vol = cube.volume()
    check("cube quadrature volume", close(vol["value"], 8.0, 5e-3), vol)
    check("volume status ok", vol["status"] == "ok")

    ball = sb.StarBody.lq_ball(2, 2)
    check("disk volume", close(ball.exact_volume(), math.pi, 1e-12))
    check(
        "from_json agrees",
        sb.StarBody.from_json('{"type":"lq_ball","n":2,"q":2}').exact_volume()
        == ball.exact_volume(),
    )
    check("scaled volume", close(ball.scaled(2.0).exact_volume(), 4 * math.pi, 1e-12))

    cross = sb.StarBody.cross_polytope(3)
    check("cross-polytope volume", close(cross.exact_volume(), 8.0 / 6.0, 1e-12))
    ell = sb.StarBody.ellipsoid([1.0, 2.0])
    check("ellipsoid gauge", close(ell.gauge([0.0, 2.0]), 1.0, 1e-12))

    # densities ---------------------------------------------------------------
    const2 = sb.Density.constant(2)
    gauss = sb.Density.gaussian(2, 1.0)
    check("gaussian center", close(gauss.eval([0.0, 0.0]), 1.0, 1e-12))
    check("density dim", const2.dim() == 2)

    # config ------------------------------------------------------------------
    cfg = sb.IntegrationConfig(seed=3, method="qmc")
    check("config seed", cfg.seed == 3)
    cfg.sphere_samples = 8192
    round_trip = sb.IntegrationConfig.from_json(cfg.to_json())
    check("config json round-trip", round_trip.sphere_samples == 8192)

    # moments -----------------------------------------------------------------
    square = sb.StarBody.cube(2, 1.0)
    m = sb.moment(square, const2, 2.0, [1.0, 0.0])
    check("square axis moment 4/3", close(m["value"], 4.0 / 3.0), m)

    # moment of the unit disk at p=1: 4/3 (closed form)
    m_disk = sb.moment(ball, const2, 1.0, [1.0, 0.0])
    check("disk p=1 moment 4/3", close(m_disk["value"], 4.0 / 3.0), m_disk)

    mm = sb.min_moment(square, const2, 2.0)
    check("square min moment flat", close(mm["value"]["value"], 4.0 / 3.0), mm)
    g = sb.gamma_ratio(square, const2, 2.0)
    check("gamma matches min-moment", close(g, mm["normalized_gamma"], 1e-9))

    # sections ----------------------------------------------------------------
    sec = sb.max_section(square, const2, "central")
    check("square max central section", close(sec["value"]["value"], 2 * math.sqrt(2), 2e-3), sec)

    sc = sb.slicing_constant(square, const2, "central")
    check("square slicing constant", close(sc["s_hat"], 4.0 / (2 * math.sqrt(2) * 2.0), 2e-3), sc)

    bound = sb.section_moment_bound(cube, sb.Density.constant(3), 2.0, [1.0, 0.0, 0.0])
    check("section bound equality case", bound["holds"] and abs(bound["margin"]) < 1e-3, bound)

    # profile functional -------------------------------------------------------
    flat = json.dumps({"type": "indicator", "half_width": 0.5})
    vals = [sb.moment_functional(flat, q) for q in (0.0, 1.0, 4.0)]
    check("indicator functional constant", all(close(v, 0.5, 1e-9) for v in vals), vals)

    # distances ----------------------------------------------------------------
    w = sb.Witness.euclidean_ball(2, 2.0)
    d = sb.dovr_upper(square, 2.0, [w])
    check("square-in-disk dovr", close(d["dovr_upper"], math.sqrt(math.pi / 2), 1e-2), d)

    a = sb.dbm_scaling(square, ball)
    check("square/disk homothety sqrt2", close(a, math.sqrt(2), 1e-6), a)
    a2, diag = sb.dbm_scaling_refined(square, ball, sweeps=2)
    check("refined no worse", a2 <= a * (1 + 1e-9), (a, a2, diag))

    dom = sb.moment_domination(ball, square, const2, 2.0, square)
    check("disk-in-square domination", dom["status"] == "ok" and dom["conclusion_holds"], dom)

    j = sb.jensen_check(square, 2.0)
    check("jensen on square", j["holds"], j)

    # error mapping -------------------------------------------------------------
    try:
        sb.StarBody.from_json('{"type":"moebius"}')
        sys.exit("FAIL bad spec accepted")
    except ValueError:
        check("bad spec raises ValueError", True)

    if args.suite:
        print("running quick verification matrix ...")
        summary = sb.verify_suite(seed=7, budget="quick")
        for c in summary["criteria"]:
            flag = "PASS" if c["passed"] else "FAIL"
            print(f'  criterion {c["id"]:02d} {c["name"]:<24} {flag}  ({c["detail"]})')
        check("verification matrix", summary["all_passed"], summary)

    print(f"all {CHECKS} smoke checks passed")


if __name__ == "__main__":
    main()
