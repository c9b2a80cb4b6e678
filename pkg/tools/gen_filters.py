"""Regenerate the static filter tables in ``wpmixer/wavelet/_tables.py``.

Daubechies and Symlet scaling filters come from spectral factorisation of the
Daubechies polynomial at 60 significant digits.  For Symlets the root subset is
the one whose filter matches the published table (PyWavelets) up to its
~1e-12 transcription error, so the phase convention is the standard one.
Coiflet tables are copied from PyWavelets (already orthonormal to 1e-16).

Run:  python tools/gen_filters.py > src/wpmixer/wavelet/_tables.py
"""
import itertools

import mpmath as mp
import numpy as np
import pywt

mp.mp.dps = 60


def _daubechies_roots(n):
    # P(y) = sum_k C(n-1+k, k) y^k, y = (2 - z - 1/z) / 4
    coeffs = [mp.binomial(n - 1 + k, k) for k in range(n)]
    yroots = mp.polyroots(coeffs[::-1], maxsteps=200, extraprec=200) if n > 1 else []
    pairs = []
    for y in yroots:
        b = 2 - 4 * y
        disc = mp.sqrt(b * b - 4)
        z1 = (b + disc) / 2
        z2 = (b - disc) / 2
        pairs.append((z1, z2))
    return pairs


def _filter_from_roots(n, roots):
    poly = [mp.mpf(1)]
    for _ in range(n):
        poly = _polymul(poly, [mp.mpf(1), mp.mpf(1)])
    for r in roots:
        poly = _polymul(poly, [mp.mpf(1), -r])
    h = [mp.re(c) for c in poly]
    s = sum(h)
    return [c * mp.sqrt(2) / s for c in h]


def _polymul(a, b):
    out = [mp.mpc(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out


def _choices(pairs):
    # group conjugate y-roots so the filter stays real
    used = set()
    groups = []
    for i, (z1, z2) in enumerate(pairs):
        if i in used:
            continue
        used.add(i)
        if abs(mp.im(z1)) < mp.mpf(10) ** -40 and abs(mp.im(z2)) < mp.mpf(10) ** -40:
            groups.append([(z1,), (z2,)])
            continue
        for j in range(i + 1, len(pairs)):
            if j in used:
                continue
            w1, w2 = pairs[j]
            if abs(w1 - mp.conj(z1)) < 1e-30 or abs(w2 - mp.conj(z1)) < 1e-30:
                used.add(j)
                conj_of = lambda z: w1 if abs(w1 - mp.conj(z)) < 1e-30 else w2
                groups.append([(z1, conj_of(z1)), (z2, conj_of(z2))])
                break
    for pick in itertools.product(*groups):
        yield [r for grp in pick for r in grp]


def daubechies(n):
    pairs = _daubechies_roots(n)
    roots = [z1 if abs(z1) < 1 else z2 for z1, z2 in pairs]
    h = _filter_from_roots(n, roots)
    return h


def symlet(n):
    ref = np.array(pywt.Wavelet(f"sym{n}").dec_lo)
    best = None
    for roots in _choices(_daubechies_roots(n)):
        h = _filter_from_roots(n, roots)
        hf = np.array([float(c) for c in h])
        for cand, arr in ((h, hf), (h[::-1], hf[::-1])):
            err = np.max(np.abs(arr - ref))
            if best is None or err < best[0]:
                best = (err, cand)
    assert best[0] < 1e-9, best[0]
    return best[1]


def _fmt(name, values):
    body = ",\n".join(f"        {mp.nstr(v, 20, min_fixed=-30, max_fixed=30)}" for v in values)
    return f"    {name!r}: (\n{body},\n    ),"


def main():
    lines = [
        '"""Scaling-filter tables (decomposition low-pass, pywt orientation).',
        "",
        "Generated by tools/gen_filters.py; do not edit by hand.",
        '"""',
        "",
        "# orthogonal families: dec_lo only, the rest follows by time reversal and QMF",
        "ORTHOGONAL = {",
    ]
    for n in (2, 3, 5):
        h = daubechies(n)[::-1]  # pywt dec_lo is the reversed minimum-phase filter
        ref = np.array(pywt.Wavelet(f"db{n}").dec_lo)
        assert np.max(np.abs(np.array([float(c) for c in h]) - ref)) < 1e-14
        lines.append(_fmt(f"db{n}", h))
    for n in (2, 3, 4, 5):
        lines.append(_fmt(f"sym{n}", symlet(n)))
    for n in (4, 5):
        lines.append(_fmt(f"coif{n}", [mp.mpf(repr(c)) for c in pywt.Wavelet(f"coif{n}").dec_lo]))
    lines.append("}")
    lines.append("")
    lines.append("# biorthogonal spline family: (dec_lo, rec_lo) as integer taps times sqrt(2) / scale")
    lines.append("BIORTHOGONAL = {")
    lines.append("    'bior3.1': ((-1, 3, 3, -1), 4, (1, 3, 3, 1), 8),")
    lines.append("    'bior3.5': ((-5, 15, 19, -97, -26, 350, 350, -26, -97, 19, 15, -5), 512,")
    lines.append("                (0, 0, 0, 0, 1, 3, 3, 1, 0, 0, 0, 0), 8),")
    lines.append("}")
    print("\n".join(lines))


if __name__ == "__main__":
    main()
