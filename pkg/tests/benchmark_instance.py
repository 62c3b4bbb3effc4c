"""The 29-station regional fire-brigade benchmark used across the tests.

Fourteen stations carry documented per-catchment risks with a known-good
greedy allocation order; fifteen filler stations (led by one at risk 36.2,
which pins the K=54 objective) complete the region without ever receiving
an extra unit. Risks are decimal strings so every ratio comparison in the
allocators is exact.
"""

LEAD_RISKS = {
    "s1": "168.9",
    "s2": "163.2",
    "s3": "141.4",
    "s4": "87.8",
    "s5": "75.3",
    "s6": "73.8",
    "s7": "68.6",
    "s8": "63.9",
    "s9": "52.8",
    "s10": "49.2",
    "s11": "48.5",
    "s12": "46.2",
    "s13": "41.4",
    "s14": "38.4",
}

FILLER_RISKS = {
    "s15": "36.2",
    "s16": "35.3",
    "s17": "33.7",
    "s18": "32.9",
    "s19": "31.1",
    "s20": "29.3",
    "s21": "28.1",
    "s22": "27.7",
    "s23": "26.9",
    "s24": "25.9",
    "s25": "24.7",
    "s26": "23.3",
    "s27": "22.1",
    "s28": "21.1",
    "s29": "19.7",
}

BENCHMARK_RISKS = {**LEAD_RISKS, **FILLER_RISKS}

K_FULL = 54
K_TRUNCATED = 39

#: Extra-vehicle assignment order at K=54, as index sets per station.
VEHICLE_ORDER = {
    "s1": {1, 5, 12, 20},
    "s2": {2, 6, 13, 22},
    "s3": {3, 9, 17},
    "s4": {4, 19},
    "s5": {7, 24},
    "s6": {8, 25},
    "s7": {10},
    "s8": {11},
    "s9": {14},
    "s10": {15},
    "s11": {16},
    "s12": {18},
    "s13": {21},
    "s14": {23},
}

VEHICLE_OBJECTIVE_4SIG = "36.2"

#: Vehicle counts after truncating the same run at K=39.
TRUNCATED_COUNTS = {
    **{s: 3 for s in ("s1", "s2", "s3")},
    **{s: 2 for s in ("s4", "s5", "s6", "s7")},
    **{f"s{i}": 1 for i in range(8, 30)},
}

CREW_SIZE = 6
K_CREWS = 200

#: Crew assignment order for alpha=6, K=200 on the truncated vehicle counts.
CREW_ORDER = {
    "s1": {1, 2, 3, 4, 5, 6, 25, 26},
    "s2": {7, 8, 9, 10, 11, 12},
    "s3": {13, 14, 15, 16, 17, 18},
    "s4": {19, 20, 21, 22, 23, 24},
}

CREW_COUNTS_HEAD = {"s1": 14, "s2": 12, "s3": 12, "s4": 12, "s5": 6, "s6": 6, "s7": 6}
