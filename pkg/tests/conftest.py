import numpy as np
import pytest

from darcy_ec.spectral import Grid, SpectralField, hermitian_part


def random_field(grid: Grid, rng, band: int | None = None, decay: float = 0.0) -> SpectralField:
    """Real, mean-zero field with modes |m_i| <= band."""
    band = grid.n // 3 - 1 if band is None else band
    c = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    m = np.abs(grid.modes)
    c = c * ((m[:, None] <= band) & (m[None, :] <= band))
    if decay:
        c = c * np.exp(-decay * grid.kmag)
    c = hermitian_part(c)
    c[0, 0] = 0
    return SpectralField(grid, c)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def grid32():
    return Grid(32)


@pytest.fixture(scope="session")
def grid64():
    return Grid(64)


ACCEPTANCE_LINES: list[str] = []


def record(label: str, ok: bool, detail: str) -> None:
    """Log one acceptance verdict; the lines are echoed in the terminal summary."""
    line = f"{'PASS' if ok else 'FAIL'} {label}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
