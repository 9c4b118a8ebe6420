"""Writes the reference P5 strips used by test_io.

Pixel (r, c) of frame k holds m/8 - 1.125 with m = (8r + c + 7k) mod 19,
so both clamps and the exact midpoint 127.5 are exercised.
"""
import math
import pathlib

HERE = pathlib.Path(__file__).parent


def frame_value(k, r, c):
    m = (8 * r + c + 7 * k) % 19
    return m / 8 - 1.125


def level(v):
    v = min(max(v, -1.0), 1.0)
    return int(math.floor((v + 1.0) * 127.5 + 0.5))


def strip(rows, cols):
    width = 8 * cols + (cols - 1)
    height = 8 * rows + (rows - 1)
    pix = bytearray([255]) * (width * height)
    for i in range(rows):
        for j in range(cols):
            k = i * cols + j
            for r in range(8):
                for c in range(8):
                    y = i * 9 + r
                    x = j * 9 + c
                    pix[y * width + x] = level(frame_value(k, r, c))
    return f"P5 {width} {height} 255\n".encode() + bytes(pix)


for rows, cols in [(1, 1), (1, 3), (2, 2)]:
    (HERE / f"strip_{rows}x{cols}.pgm").write_bytes(strip(rows, cols))
