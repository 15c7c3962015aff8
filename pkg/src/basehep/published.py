"""Published benchmark accuracies from the original study of this method.

The original system ran on Claude 3.5 Sonnet with a curated private dataset;
these numbers are NOT reproducible offline and are shipped only for
side-by-side display next to locally computed summaries. Values are
(mean, standard deviation) of top-5 accuracy per attribute dimension.
"""
from __future__ import annotations

PUBLISHED_NOTE = (
    "Reference accuracies reported for the original Claude 3.5 Sonnet system; "
    "shown for comparison only, not reproducible with a local provider."
)

# table code -> shot count -> dimension -> (mean, std)
PUBLISHED_ACCURACY: dict[str, dict[int, dict[str, tuple[float, float]]]] = {
    "SF": {
        0: {
            "pif": (0.628, 0.119),
            "cfm": (0.893, 0.069),
            "task_and_error_measure": (0.622, 0.115),
            "pif_measure": (0.720, 0.112),
            "other_pifs_and_uncertainty": (0.374, 0.112),
        },
        1: {
            "pif": (0.659, 0.106),
            "cfm": (0.862, 0.079),
            "task_and_error_measure": (0.858, 0.078),
            "pif_measure": (0.835, 0.076),
            "other_pifs_and_uncertainty": (0.526, 0.103),
        },
        3: {
            "pif": (0.663, 0.103),
            "cfm": (0.896, 0.064),
            "task_and_error_measure": (0.857, 0.072),
            "pif_measure": (0.836, 0.075),
            "other_pifs_and_uncertainty": (0.669, 0.103),
        },
        5: {
            "pif": (0.777, 0.171),
            "cfm": (0.888, 0.132),
            "task_and_error_measure": (0.946, 0.096),
            "pif_measure": (0.872, 0.136),
            "other_pifs_and_uncertainty": (0.666, 0.204),
        },
    },
    "IAR": {
        0: {
            "pif": (0.635, 0.317),
            "cfm": (1.000, 0.000),
            "task_and_error_measure": (0.861, 0.223),
            "pif_measure": (0.732, 0.286),
            "other_pifs_and_uncertainty": (0.747, 0.276),
        },
        1: {
            "pif": (0.511, 0.320),
            "cfm": (1.000, 0.000),
            "task_and_error_measure": (1.000, 0.000),
            "pif_measure": (0.640, 0.300),
            "other_pifs_and_uncertainty": (0.860, 0.224),
        },
        3: {
            "pif": (0.731, 0.288),
            "cfm": (1.000, 0.000),
            "task_and_error_measure": (1.000, 0.000),
            "pif_measure": (0.630, 0.317),
            "other_pifs_and_uncertainty": (0.875, 0.216),
        },
        5: {
            "pif": (0.886, 0.209),
            "cfm": (1.000, 0.000),
            "task_and_error_measure": (1.000, 0.000),
            "pif_measure": (0.869, 0.068),
            "other_pifs_and_uncertainty": (1.000, 0.000),
        },
    },
    "TC": {
        0: {
            "pif": (0.742, 0.161),
            "cfm": (0.941, 0.091),
            "task_and_error_measure": (0.794, 0.149),
            "pif_measure": (0.394, 0.195),
            "other_pifs_and_uncertainty": (0.675, 0.175),
        },
        1: {
            "pif": (0.665, 0.153),
            "cfm": (1.000, 0.000),
            "task_and_error_measure": (0.891, 0.107),
            "pif_measure": (0.605, 0.163),
            "other_pifs_and_uncertainty": (0.890, 0.108),
        },
        3: {
            "pif": (0.584, 0.190),
            "cfm": (1.000, 0.000),
            "task_and_error_measure": (0.791, 0.162),
            "pif_measure": (0.735, 0.159),
            "other_pifs_and_uncertainty": (0.933, 0.094),
        },
        5: {
            "pif": (0.720, 0.157),
            "cfm": (1.000, 0.000),
            "task_and_error_measure": (0.943, 0.079),
            "pif_measure": (0.677, 0.163),
            "other_pifs_and_uncertainty": (0.943, 0.079),
        },
    },
}
