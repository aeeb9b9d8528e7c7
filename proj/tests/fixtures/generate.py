"""Regenerates the binary and derived fixtures in this directory.

The hand-built two-measure piece is written here in MusicXML, kern and SMF
from one note list. The chorale MIDI files are music21 exports of the kern
fixtures (music21 is needed only to rerun this script).
"""

import os
import struct
import sys

HERE = os.path.dirname(os.path.abspath(__file__))

# (midi, onset, duration) in quarter beats, upper part then lower part.
UPPER = [(67, 0, 1), (69, 1, 1), (71, 2, 2), (72, 4, 1.5), (71, 5.5, 0.5), (69, 6, 2)]
LOWER = [(55, 0, 4), (48, 4, 2), (50, 6, 2)]


def vlq(n):
    out = [n & 0x7F]
    n >>= 7
    while n:
        out.append((n & 0x7F) | 0x80)
        n >>= 7
    return bytes(reversed(out))


def track(events):
    body = b""
    for delta, data in events:
        body += vlq(delta) + data
    body += b"\x00\xff\x2f\x00"
    return b"MTrk" + struct.pack(">I", len(body)) + body


def note_track(notes, channel, ppq):
    msgs = []
    for midi, on, dur in notes:
        msgs.append((round(on * ppq), 1, bytes([0x90 | channel, midi, 80])))
        msgs.append((round((on + dur) * ppq), 0, bytes([0x80 | channel, midi, 0])))
    msgs.sort(key=lambda m: (m[0], m[1]))
    out, now = [], 0
    for tick, _, data in msgs:
        out.append((tick - now, data))
        now = tick
    return track(out)


def write_midi(path):
    ppq = 480
    meta = track([
        (0, b"\xff\x58\x04\x04\x02\x18\x08"),  # 4/4
        (0, b"\xff\x59\x02\x01\x00"),          # one sharp, major
        (0, b"\xff\x51\x03\x07\xa1\x20"),      # 120 bpm
    ])
    data = b"MThd" + struct.pack(">IHHH", 6, 1, 3, ppq)
    data += meta + note_track(UPPER, 0, ppq) + note_track(LOWER, 1, ppq)
    with open(path, "wb") as f:
        f.write(data)


def write_corrupt_midi(path):
    # Header promises two tracks; the only track chunk is truncated.
    data = b"MThd" + struct.pack(">IHHH", 6, 1, 2, 480) + b"MTrk" + struct.pack(">I", 400) + b"\x00\x90\x3c"
    with open(path, "wb") as f:
        f.write(data)


def write_chorale_midi():
    try:
        import music21
    except ImportError:
        print("music21 not installed; chorale MIDI fixtures left unchanged", file=sys.stderr)
        return
    for name in ("bwv281", "bwv366"):
        score = music21.converter.parse(os.path.join(HERE, name + ".krn"))
        score.write("midi", fp=os.path.join(HERE, name + ".mid"))


if __name__ == "__main__":
    write_midi(os.path.join(HERE, "two_measures.mid"))
    write_corrupt_midi(os.path.join(HERE, "corrupt.mid"))
    write_chorale_midi()
