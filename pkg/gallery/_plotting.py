# Optional plotting helper shared by the gallery scripts.
# Figures are written next to the scripts when matplotlib is installed;
# otherwise the scripts only print.
import os


def pyplot():
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        return None
    return plt


def save(fig, name):
    path = os.path.join(os.path.dirname(os.path.abspath(__file__)), name)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    print("wrote", path)
