"""Displayed delta points of the three catalog balayages.

Each matrix lists levels N = 1..4 as rows and states 1..N as columns; the
mass at state 0 is implied.
"""
from fractions import Fraction as F

h, t = F(1, 2), F(1, 3)

DOWN = {
    1: [[1], [1, 0], [1, 0, 0], [1, 0, 0, 0]],
    2: [[1], [0, 1], [0, 1, 0], [0, 1, 0, 0]],
    3: [[1], [0, 1], [0, 0, 1], [0, 0, 1, 0]],
    4: [[1], [0, 1], [0, 0, 1], [0, 0, 0, 1]],
}
DOWN_LIMIT = [[1], [0, 1], [0, 0, 1], [0, 0, 0, 1]]

TWO_DOWN = {
    1: [[1], [1, 0], [1, 0, 0], [1, 0, 0, 0]],
    2: [[0], [0, 1], [0, 1, 0], [0, 1, 0, 0]],
    3: [[1], [1, 0], [0, 0, 1], [0, 0, 1, 0]],
    4: [[0], [0, 1], [0, 1, 0], [0, 0, 0, 1]],
}
TWO_DOWN_EVEN = [[0], [0, 1], [0, 1, 0], [0, 0, 0, 1]]
TWO_DOWN_ODD = [[1], [1, 0], [0, 0, 1], [0, 0, 1, 0]]

UNIFORM = {
    1: [[1], [1, 0], [1, 0, 0], [1, 0, 0, 0]],
    2: [[1], [0, 1], [0, 1, 0], [0, 1, 0, 0]],
    3: [[1], [h, h], [0, 0, 1], [0, 0, 1, 0]],
    4: [[1], [h, h], [t, t, t], [0, 0, 0, 1]],
}
UNIFORM_LIMIT = [[1], [h, h], [t, t, t], [F(1, 4)] * 4]


def display(seq, top=4):
    return [[seq[n][b] for b in range(1, n + 1)] for n in range(1, top + 1)]
