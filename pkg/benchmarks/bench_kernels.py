"""Compare the compiled and numpy kernels (DWT, GELU), alone and inside a full model step.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from wpmixer._kernels import _fallback

try:
    from wpmixer._kernels import _dwt, _gelu
except ImportError:
    _dwt = _gelu = None


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_kernels(repeat: int) -> None:
    from wpmixer.wavelet import filter_bank

    rng = np.random.default_rng(0)
    print(f"{'case':34s} {'numpy ms':>10s} {'cython ms':>10s} {'speedup':>8s}")
    for wavelet in ("db2", "db5", "coif5"):
        f = filter_bank(wavelet).dec_lo
        for rows, n in ((7 * 256, 512), (862 * 16, 1200)):
            x = rng.standard_normal((rows, n))
            n_out = (n + len(f) - 1) // 2
            t_np = best_of(lambda: _fallback.down(x, f, n_out), repeat)
            label = f"down {wavelet} {rows}x{n}"
            if _dwt is None:
                print(f"{label:34s} {t_np * 1e3:10.2f} {'n/a':>10s}")
                continue
            a, b = _fallback.down(x, f, n_out), _dwt.down(x, f, n_out)
            assert np.allclose(a, b, rtol=0, atol=1e-12)
            t_cy = best_of(lambda: _dwt.down(x, f, n_out), repeat)
            print(f"{label:34s} {t_np * 1e3:10.2f} {t_cy * 1e3:10.2f} {t_np / t_cy:8.2f}")
            y = rng.standard_normal((rows, n_out))
            t_np = best_of(lambda: _fallback.up(y, f, n), repeat)
            t_cy = best_of(lambda: _dwt.up(y, f, n), repeat)
            label = f"up   {wavelet} {rows}x{n_out}"
            print(f"{label:34s} {t_np * 1e3:10.2f} {t_cy * 1e3:10.2f} {t_np / t_cy:8.2f}")


def bench_gelu(repeat: int) -> None:
    rng = np.random.default_rng(2)
    for n in (1 << 16, 1 << 22):
        x = rng.standard_normal(n)
        t_np = best_of(lambda: _fallback.gelu_forward(x), repeat)
        if _gelu is None:
            print(f"{'gelu fwd ' + str(n):34s} {t_np * 1e3:10.2f} {'n/a':>10s}")
            continue
        t_cy = best_of(lambda: _gelu.gelu_forward(x), repeat)
        print(f"{'gelu fwd ' + str(n):34s} {t_np * 1e3:10.2f} {t_cy * 1e3:10.2f} {t_np / t_cy:8.2f}")


def bench_model(repeat: int) -> None:
    """One forward + backward of a small model under each backend."""
    import wpmixer._kernels as k
    from wpmixer.model import ModelConfig, WPMixer

    cfg = ModelConfig(n_channels=7, seq_len=512, pred_len=96, wavelet="db5", level=3,
                      d_model=16, tfactor=3, dfactor=3)
    x = np.random.default_rng(1).standard_normal((32, 7, 512))
    model = WPMixer(cfg, np.random.default_rng(0))

    def step():
        model.zero_grad()
        y = model.forward(x, training=True)
        (y * y).mean().backward()

    results = {}
    saved = k.down, k.up, k.gelu_forward
    for name, dwt, act in (("numpy", _fallback, _fallback), ("cython", _dwt, _gelu)):
        if dwt is None:
            continue
        k.down, k.up = dwt.down, dwt.up
        k.gelu_forward = act.gelu_forward
        results[name] = best_of(step, repeat)
    k.down, k.up, k.gelu_forward = saved
    line = "  ".join(f"{n} {t * 1e3:.1f} ms" for n, t in results.items())
    print(f"\nfull train step (db5, m=3, d=16, batch 32): {line}")


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    bench_kernels(args.repeat)
    bench_gelu(args.repeat)
    bench_model(args.repeat)


if __name__ == "__main__":
    main()
