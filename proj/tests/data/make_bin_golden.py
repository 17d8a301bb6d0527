# Copyright 2026 The tracelab Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
# http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Writes bin_golden.bin: two 64-byte bins laid out by hand.

Layout per bin: [u16 n][n x (u32 tile_id, u16 offset, u16 flags)][payload][zero pad].
Tiles: id 7 with bytes 1..10, id 9 with bytes 101..130. Padding draw is a
constant 4 bytes, kappa is 2, table entries are 8 bytes.
"""

import struct
from pathlib import Path

BIN = 64
GAP = 0xFFFFFFFF
CONT = 1

a = bytes(range(1, 11))
b = bytes(range(101, 131))


def bin_image(entries, payload):
    out = struct.pack("<H", len(entries))
    for tid, off, flags in entries:
        out += struct.pack("<IHH", tid, off, flags)
    out += payload
    return out + bytes(BIN - len(out))


# bin 0: header 2 + 3 entries -> payload starts at 26; usable = 64-2-8-4 = 50
# holds all of A (8+10) and 24 bytes of B (8+24).
bin0 = bin_image([(7, 26, 0), (9, 36, 0), (GAP, 60, 0)], a + b[:24])
# bin 1: continuation of B, 6 bytes at 18.
bin1 = bin_image([(9, 18, CONT), (GAP, 24, 0)], b[24:])

Path(__file__).with_name("bin_golden.bin").write_bytes(bin0 + bin1)
