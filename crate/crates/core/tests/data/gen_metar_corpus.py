"""Writes metar_corpus.txt and metar_corpus_expected.csv.

Each report is encoded from known physical values, and the expected CSV
holds those values in canonical units, so the parser is checked against
the encoder rather than against itself. Reports without an archive stamp
belong to July 2011. Run once; output is committed.
"""
import csv
import random

KM_PER_MILE = 1.609344
MPS_PER_KNOT = 0.514444
HPA_PER_INHG = 33.86389

rng = random.Random(20110701)
lines = []
expected = []

ICAO = ["SCEL", "SCTE", "EGLL", "LFPG", "EDDF", "RJTT", "YSSY", "SBGR"]
US = ["KSFO", "KORD", "KJFK", "KSEA", "KDEN", "PANC"]
MILE_FRACTIONS = [("1/8", 0.125), ("1/4", 0.25), ("3/8", 0.375), ("1/2", 0.5), ("5/8", 0.625), ("3/4", 0.75)]
WX = ["", "FG", "BR", "-RA", "MIFG", "BCFG", "-DZ BR", "HZ", "FZFG", "RA"]
CLOUDS = ["", "FEW008", "SCT020", "BKN004", "OVC002", "VV001", "FEW030 BKN080", "NSC", "SKC", "CLR"]


def temp_token(t):
    if t is None:
        return "//"
    return ("M%02d" % -t) if t < 0 else ("%02d" % t)


def fmt(v):
    return "" if v is None else repr(float(v))


def emit(text, station, ts, vis, t, d, wind, pres):
    lines.append(text)
    expected.append([station, ts, fmt(vis), fmt(t), fmt(d), fmt(wind), fmt(pres)])


def wind_group(unit):
    direction = rng.choice(["VRB"] + ["%03d" % (10 * rng.randrange(0, 37))])
    speed = rng.randrange(0, 30 if unit == "KT" else 15)
    gust = ""
    if speed > 8 and rng.random() < 0.3:
        gust = "G%02d" % (speed + rng.randrange(5, 15))
    if speed == 0:
        direction = "000"
    factor = {"KT": MPS_PER_KNOT, "MPS": 1.0, "KMH": 1.0 / 3.6}[unit]
    return "%s%02d%s%s" % (direction, speed, gust, unit), speed * factor


def metric_visibility():
    r = rng.random()
    if r < 0.15:
        return "CAVOK", 10.0
    if r < 0.35:
        return "9999", 10.0
    metres = rng.choice([50, 100, 200, 300, 400, 500, 600, 800, 1000, 1200, 1500, 2000, 3000, 4000, 5000, 6000, 8000])
    suffix = rng.choice(["", "", "", "NDV"])
    return "%04d%s" % (metres, suffix), metres / 1000.0


def mile_visibility():
    r = rng.random()
    if r < 0.25:
        return "10SM", 10 * KM_PER_MILE
    if r < 0.35:
        return "P6SM", 6 * KM_PER_MILE
    if r < 0.45:
        return "M1/4SM", 0.25 * KM_PER_MILE
    if r < 0.7:
        text, frac = rng.choice(MILE_FRACTIONS)
        return text + "SM", frac * KM_PER_MILE
    if r < 0.85:
        whole = rng.randrange(1, 3)
        text, frac = rng.choice(MILE_FRACTIONS[1:4])
        return "%d %sSM" % (whole, text), (whole + frac) * KM_PER_MILE
    miles = rng.randrange(1, 10)
    return "%dSM" % miles, miles * KM_PER_MILE


def temperatures():
    t = rng.randrange(-15, 35)
    d = t - rng.randrange(0, 12)
    return t, d


def july_time():
    day = rng.randrange(1, 32)
    hour = rng.randrange(0, 24)
    minute = rng.choice([0, 20, 30, 50, 51, 53, 56])
    return day, hour, minute


# ICAO-style reports with metric visibility and QNH
for _ in range(90):
    station = rng.choice(ICAO)
    day, hour, minute = july_time()
    unit = rng.choice(["KT", "KT", "KT", "MPS", "KMH"])
    wtext, wind = wind_group(unit)
    vtext, vis = metric_visibility()
    t, d = temperatures()
    q = rng.randrange(985, 1040)
    parts = [station, "%02d%02d%02dZ" % (day, hour, minute), wtext, vtext]
    if vtext != "CAVOK":
        if vis < 2.0 and rng.random() < 0.4:
            parts.append("R27L/P%04d" % rng.choice([600, 1200, 1500]))
        wx = rng.choice(WX)
        if wx:
            parts.append(wx)
        cl = rng.choice(CLOUDS[:8])
        if cl:
            parts.append(cl)
    parts += ["%s/%s" % (temp_token(t), temp_token(d)), "Q%04d" % q]
    parts.append(rng.choice(["", "NOSIG", "BECMG 0300 FG", "TEMPO 4000 BR"]))
    text = " ".join(p for p in parts if p)
    if rng.random() < 0.3:
        text = "METAR " + text + "="
    emit(text, station, "2011-07-%02dT%02d:%02d:00Z" % (day, hour, minute), vis, t, d, wind, q)

# US-style reports with statute miles, altimeter and remarks
for _ in range(90):
    station = rng.choice(US)
    day, hour, minute = july_time()
    wtext, wind = wind_group("KT")
    vtext, vis = mile_visibility()
    t, d = temperatures()
    alt = rng.randrange(2900, 3080)
    parts = [rng.choice(["METAR", "SPECI", ""]), station, "%02d%02d%02dZ" % (day, hour, minute)]
    parts.append(rng.choice(["", "", "AUTO", "COR"]))
    parts += [wtext, vtext]
    wx = rng.choice(WX)
    if wx:
        parts.append(wx)
    parts.append(rng.choice(CLOUDS[1:]))
    parts += ["%s/%s" % (temp_token(t), temp_token(d)), "A%04d" % alt]
    parts.append("RMK AO2 SLP%03d T%s%03d%s%03d" % (rng.randrange(0, 999), "1" if t < 0 else "0", abs(t) * 10, "1" if d < 0 else "0", abs(d) * 10))
    text = " ".join(p for p in parts if p)
    emit(text, station, "2011-07-%02dT%02d:%02d:00Z" % (day, hour, minute), vis, t, d, wind, alt / 100.0 * HPA_PER_INHG)

# archive lines carrying their own YYYYMMDDHHMM stamp, across months
DAYS = [31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31]
for _ in range(45):
    year = rng.choice([2009, 2010, 2012])
    month = rng.randrange(1, 13)
    day = rng.randrange(1, DAYS[month - 1] + 1)
    hour = rng.randrange(0, 24)
    minute = rng.choice([0, 30])
    station = rng.choice(ICAO + US)
    if station in US:
        wtext, wind = wind_group("KT")
        vtext, vis = mile_visibility()
        alt = rng.randrange(2900, 3080)
        ptext, pres = "A%04d" % alt, alt / 100.0 * HPA_PER_INHG
    else:
        wtext, wind = wind_group("KT")
        vtext, vis = metric_visibility()
        q = rng.randrange(985, 1040)
        ptext, pres = "Q%04d" % q, float(q)
    t, d = temperatures()
    body = "%s %02d%02d%02dZ %s %s %s/%s %s" % (station, day, hour, minute, wtext, vtext, temp_token(t), temp_token(d), ptext)
    stamp = "%04d%02d%02d%02d%02d" % (year, month, day, hour, minute)
    text = "%s %s %s=" % (stamp, rng.choice(["METAR", "SPECI"]), body)
    emit(text, station, "%04d-%02d-%02dT%02d:%02d:00Z" % (year, month, day, hour, minute), vis, t, d, wind, pres)

# reports with missing or unreadable optional groups
for k in range(24):
    station = rng.choice(ICAO)
    day, hour, minute = july_time()
    t, d = temperatures()
    q = rng.randrange(985, 1040)
    wtext, wind = wind_group("KT")
    vtext, vis = metric_visibility()
    kind = k % 6
    if kind == 0:
        wtext, wind = "/////KT", None
    elif kind == 1:
        vtext, vis = "////", None
    elif kind == 2:
        d = None
    elif kind == 3:
        t, d = None, None
    elif kind == 4:
        wtext, wind = "", None
    else:
        q = None
    tt = "" if t is None and d is None and kind == 3 else "%s/%s" % (temp_token(t), temp_token(d))
    if kind == 2:
        tt = "%s/" % temp_token(t)
    parts = [station, "%02d%02d%02dZ" % (day, hour, minute), rng.choice(["", "AUTO"]), wtext, vtext, rng.choice(CLOUDS[1:8]), tt]
    if q is not None:
        parts.append("Q%04d" % q)
    text = " ".join(p for p in parts if p)
    emit(text, station, "2011-07-%02dT%02d:%02d:00Z" % (day, hour, minute), vis, t, d, wind, None if q is None else float(q))

order = list(range(len(lines)))
rng.shuffle(order)
lines = [lines[i] for i in order]
expected = [expected[i] for i in order]

# one undecodable line: time group without the day
lines.insert(137, "EGLL 1208Z 24010KT 9999 15/09 Q1011")
expected.insert(137, ["EGLL", "REJECT", "", "", "", "", ""])

with open("metar_corpus.txt", "w") as f:
    f.write("# METAR/SPECI corpus. Reports without an archive stamp are from July 2011.\n")
    for line in lines:
        f.write(line + "\n")

with open("metar_corpus_expected.csv", "w", newline="") as f:
    w = csv.writer(f, lineterminator="\n")
    w.writerow(["station", "timestamp", "visibility_km", "temp_c", "dewpoint_c", "wind_speed_mps", "pressure_hpa"])
    w.writerows(expected)

print(len(lines), "reports")
