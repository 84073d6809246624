import warnings

import pytest

import superlind as sl


@pytest.fixture(autouse=True)
def _quiet_adiabaticity_warnings():
    """Fast-sweep points legitimately warn; keep test output readable."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sl.AdiabaticityWarning)
        yield
