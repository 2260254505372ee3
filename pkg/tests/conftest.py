import time

import pytest

import calabiband as cb

THREADS = 8


@pytest.fixture(scope="session")
def profile_sm2():
    return cb.solve_c0(cb.ProfileParams(1, -2.0))


@pytest.fixture(scope="session")
def chart_sm2(profile_sm2):
    return cb.build_chart(profile_sm2)


@pytest.fixture(scope="session")
def profile_canon():
    # the curve toy (genus 2, degree 2): S_M = (2 - 2g)/d = -1
    return cb.solve_c0(cb.ProfileParams(1, -1.0))


@pytest.fixture(scope="session")
def chart_canon(profile_canon):
    return cb.build_chart(profile_canon)


@pytest.fixture(scope="session")
def sur_sm2_k100(profile_sm2, chart_sm2):
    return cb.make_surrogate(profile_sm2, chart_sm2, 100.0, threads=THREADS)


@pytest.fixture(scope="session")
def sur_sm2_k400(profile_sm2, chart_sm2):
    """The 1200-band sweep behind the mu-regime acceptance criterion; the
    build wall time is recorded for the runtime budget assertion."""
    t0 = time.perf_counter()
    sur = cb.make_surrogate(profile_sm2, chart_sm2, 400.0, threads=THREADS)
    elapsed = time.perf_counter() - t0
    return sur, elapsed
