"""Adaptive-law ablation.

Runs the reference scenario twice: once with the two disturbance estimators
active and once with the estimates frozen at zero.  With the estimators on,
the steady-state oscillation caused by the sinusoidal disturbances is
smaller for every vehicle.
"""

import numpy as np

from platoon_vss import paper_iv, run_ablation


def main():
    print("running paired scenarios (adaptive on / off)...")
    result = run_ablation(paper_iv())

    on = result.with_adaptive.post_transient_amplitude
    off = result.without_adaptive.post_transient_amplitude
    print("\npost-transient position-error amplitude [m]:")
    print(f"{'vehicle':>8} {'adaptive on':>12} {'adaptive off':>13} {'ratio':>8}")
    for i in range(on.size):
        print(f"{i + 1:>8} {on[i]:>12.4f} {off[i]:>13.4f} "
              f"{result.amplitude_ratio[i]:>8.4f}")

    assert np.all(on < off), "expected the adaptive laws to shrink the amplitude"
    print("\nadaptive laws reduce the residual oscillation for every vehicle "
          f"(worst ratio {np.max(result.amplitude_ratio):.3f} < 1)")


if __name__ == "__main__":
    main()
