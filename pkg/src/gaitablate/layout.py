"""Reference 62-marker full-body layout and its body-part / 17-role maps.

The marker names follow the usual full-body conventions (L/R prefix,
Plug-in-Gait style abbreviations). Medial markers (ELM, KNM, ANM) allow
joint centres to be taken as lateral/medial midpoints.
"""

GROUPS = ("head", "torso", "hip", "arms", "legs")

HEAD = ["LFHD", "RFHD", "LBHD", "RBHD"]
TORSO = ["C7", "T4", "T10", "CLAV", "STRN", "RBAK"]
HIP = ["LASI", "RASI", "LPSI", "RPSI", "LGTR", "RGTR"]
_ARM = ["SHO", "UPA", "ELB", "ELM", "FRM", "WRA", "WRB", "FIN"]
_LEG = ["THI", "TH2", "TH3", "KNE", "KNM", "TIB", "TB2", "TB3",
        "ANK", "ANM", "HEE", "HEL", "MT1", "MT5", "TOE"]
ARMS = [side + m for side in "LR" for m in _ARM]
LEGS = [side + m for side in "LR" for m in _LEG]

MARKERS = HEAD + TORSO + HIP + ARMS + LEGS

GROUP_OF = {
    **{m: "head" for m in HEAD},
    **{m: "torso" for m in TORSO},
    **{m: "hip" for m in HIP},
    **{m: "arms" for m in ARMS},
    **{m: "legs" for m in LEGS},
}

# Order matters: it is the column order of the reduced 17-marker sample.
ROLES = (
    "head", "neck", "torso",
    "lshoulder", "rshoulder", "lelbow", "relbow", "lwrist", "rwrist",
    "lhip", "rhip", "lknee", "rknee", "lankle", "rankle", "ltoe", "rtoe",
)


def _sided(side):
    s = side.upper()
    low = side.lower()
    return {
        f"{low}shoulder": [s + "SHO"],
        f"{low}elbow": [s + "ELB", s + "ELM"],
        f"{low}wrist": [s + "WRA", s + "WRB"],
        f"{low}hip": [s + "ASI", s + "PSI", s + "GTR"],
        f"{low}knee": [s + "KNE", s + "KNM"],
        f"{low}ankle": [s + "ANK", s + "ANM"],
        f"{low}toe": [s + "TOE", s + "MT1", s + "MT5"],
    }


REDUCTION_17 = {
    "head": list(HEAD),
    "neck": ["C7", "CLAV"],
    "torso": ["T10", "STRN"],
    **_sided("l"),
    **_sided("r"),
}
REDUCTION_17 = {role: REDUCTION_17[role] for role in ROLES}

assert len(MARKERS) == 62 and len(set(MARKERS)) == 62
