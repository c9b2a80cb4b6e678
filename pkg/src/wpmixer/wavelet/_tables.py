"""Scaling-filter tables (decomposition low-pass, pywt orientation).

Generated by tools/gen_filters.py; do not edit by hand.
"""

# orthogonal families: dec_lo only, the rest follows by time reversal and QMF
ORTHOGONAL = {
    'db2': (
        -0.12940952255126038117,
        0.22414386804201338103,
        0.83651630373780790558,
        0.48296291314453414337,
    ),
    'db3': (
        0.035226291885709536603,
        -0.085441273882026661693,
        -0.1350110200102545887,
        0.4598775021184915701,
        0.80689150931109257649,
        0.332670552950082616,
    ),
    'db5': (
        0.003335725285473771278,
        -0.012580751999081999469,
        -0.0062414902127982742742,
        0.077571493840045713523,
        -0.032244869584638374648,
        -0.24229488706638203186,
        0.13842814590132073151,
        0.72430852843777292773,
        0.60382926979718967054,
        0.16010239797419291448,
    ),
    'sym2': (
        -0.12940952255126038117,
        0.22414386804201338103,
        0.83651630373780790558,
        0.48296291314453414337,
    ),
    'sym3': (
        0.035226291885709536603,
        -0.085441273882026661693,
        -0.1350110200102545887,
        0.4598775021184915701,
        0.80689150931109257649,
        0.332670552950082616,
    ),
    'sym4': (
        -0.075765714789502213228,
        -0.029635527646002491764,
        0.49761866763277498998,
        0.80373875180513208088,
        0.2978577956053060514,
        -0.099219543576633532585,
        -0.012603967262031303754,
        0.032223100604051467872,
    ),
    'sym5': (
        0.027333068344998768818,
        0.02951949092570626125,
        -0.039134249302313843624,
        0.1993975339768555969,
        0.72340769040404079207,
        0.63397896345679206372,
        0.016602105764510848133,
        -0.17532808990805622424,
        -0.021101834024689041001,
        0.019538882735249826776,
    ),
    'coif4': (
        -0.0000017849909144933469,
        -0.000003259647940030751,
        0.000031229861599195265,
        0.00006233885431278719,
        -0.0002599743371222568,
        -0.0005890202246332165,
        0.0012665610789256603,
        0.0037514346971460866,
        -0.0056582838001308835,
        -0.015211728187697211,
        0.02508225333794961,
        0.03933442260558915,
        -0.09622042453595264,
        -0.06662747236681717,
        0.43438603311435653,
        0.7822389344242826,
        0.41530842700068227,
        -0.05607731960356926,
        -0.08126671024919373,
        0.02668230466960483,
        0.01606894713157503,
        -0.007346167936268051,
        -0.001629492425226786,
        0.000892313902537003,
    ),
    'coif5': (
        -0.00000009604010112767894,
        -0.00000016237995172048338,
        0.0000020612203985788783,
        0.0000037007277113394796,
        -0.000021270221672515614,
        -0.0000412198619242655,
        0.00014035632812373243,
        0.0003018579416682448,
        -0.0006375589261258812,
        -0.0016616273039298788,
        0.0024315754425382886,
        0.006761520220620417,
        -0.009159507338676163,
        -0.019758391600965465,
        0.032674799467057355,
        0.041287530472117834,
        -0.10556315130733723,
        -0.06203775157498196,
        0.4379823066591634,
        0.7742936228603274,
        0.42157126673075435,
        -0.052046670253554764,
        -0.09192158806008609,
        0.028169744270532353,
        0.023408322118927783,
        -0.010131584846900276,
        -0.00415931262757864,
        0.0021782943778456947,
        0.0003585777411617577,
        -0.000212081862067494,
    ),
}

# biorthogonal spline family: (dec_lo, rec_lo) as integer taps times sqrt(2) / scale
BIORTHOGONAL = {
    'bior3.1': ((-1, 3, 3, -1), 4, (1, 3, 3, 1), 8),
    'bior3.5': ((-5, 15, 19, -97, -26, 350, 350, -26, -97, 19, 15, -5), 512,
                (0, 0, 0, 0, 1, 3, 3, 1, 0, 0, 0, 0), 8),
}
