import io

import numpy as np
import pytest

from had import DifferencedSample, load_panel


def make_panel_csv(units, periods, outcomes, doses):
    """Long CSV text; treatment starts at the last period."""
    lines = ["unit,time,outcome,dose"]
    for i, u in enumerate(units):
        for j, t in enumerate(periods):
            dose = float(doses[i]) if t >= periods[-1] else 0.0
            lines.append(f"{u},{t},{float(outcomes[i][j])!r},{dose!r}")
    return "\n".join(lines) + "\n"


@pytest.fixture
def tiny_panel():
    """3 units x 2 periods, doses (1, 2, 3) at period 2."""
    text = make_panel_csv(
        ["a", "b", "c"], [1, 2], [[1.0, 3.0], [0.0, 1.0], [2.0, 2.0]], [1.0, 2.0, 3.0]
    )
    return load_panel(io.StringIO(text))


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def grid_sample(G=200, slope=1.0, lo=0.005, hi=1.0):
    """Noiseless sample with dy exactly slope * d on a dose grid."""
    d = np.linspace(lo, hi, G)
    return DifferencedSample(dy=slope * d, d=d.copy(), base_period=1, target_period=2)
