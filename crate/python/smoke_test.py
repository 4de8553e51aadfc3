"""Smoke test for the cocycle_lab Python module.

Install first with `pip install --no-build-isolation -e crates/py`, then run `python python/smoke_test.py`.
"""

import math

import cocycle_lab as lab


def check_matrices():
    a = lab.Mat2.rotation(0.3) * lab.Mat2.diag(3.0) * lab.Mat2.rotation(-1.1)
    assert abs(a.det() - 1.0) < 1e-12
    assert abs(a.norm() - 3.0) < 1e-12
    u, s, norm = a.singular_axes()
    assert abs(u[0] * s[0] + u[1] * s[1]) < 1e-12 and abs(norm - 3.0) < 1e-12
    back = lab.Mat2.exp(*lab.Mat2.diag(1.5).log())
    assert back.distance(lab.Mat2.diag(1.5)) < 1e-12
    try:
        lab.Mat2(1.0, 0.0, 0.0, 2.0)
    except ValueError:
        pass
    else:
        raise AssertionError("a non-unimodular matrix was accepted")


def check_growth():
    hyp = lab.Cocycle.constant(lab.Mat2.diag(2.0), grid=256)
    assert abs(hyp.lyapunov_estimate(0.1, 10_000) - math.log(2.0)) < 1e-9
    passed, worst = hyp.uniform_growth_test(0.5, 200)
    assert not passed and worst > 0.5
    assert hyp.uh_certify()["outcome"] == "certificate"
    rot = lab.Cocycle.rotation(0.2, 1, grid=256)
    assert rot.uniform_growth_test(0.01, 500)[0]


def check_perturbation():
    co = lab.Cocycle.schrodinger(0.0, 3.0)
    block = co.steer(0.4, [1.0, 0.0], [0.0, 1.0], 0.1)
    assert block["error"] < 1e-6
    batch = co.plan_segments(0.1, [0.05, 0.5, 0.95])
    assert all(o["report"]["pass"] for o in batch["outcomes"])


def check_towers():
    assert lab.frobenius_threshold(10) == 90
    short, tall = lab.decompose_height(100, 10)
    assert 10 * short + 11 * tall == 100
    castle = lab.build_castle(10, base="silver", samples=2000)
    assert castle["pass"] and set(castle["heights"]) <= {10, 11}
    freq = lab.visit_freq_bound([0.3], 0.05, grid=16384)
    assert freq["sup_frequency"] < 0.05


def check_hopf():
    report = lab.hopf_report(2 * math.pi * (math.sqrt(5) - 1) / 2)
    assert report["winding"] == 1
    assert report["certificate"]["expansion"] >= 2 - 1e-6
    assert lab.winding_number([2 * t * math.pi / 64 % math.pi for t in range(64)]) == 1


if __name__ == "__main__":
    for check in (check_matrices, check_growth, check_perturbation, check_towers, check_hopf):
        check()
        print(f"ok {check.__name__}")
