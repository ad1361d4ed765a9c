"""Published two-resource schedules for k = 1..11, keyed by (variant, order)."""

SCHEDULE_TABLE = {
    ("T1", "in"): [[1, 2, 3, 4, 5, 6], [7, 8, 9, 10, 11]],
    ("T1", "pre"): [[6, 3, 2, 1, 5, 4], [9, 8, 7, 11, 10]],
    ("T1", "post"): [[1, 2, 4, 5, 3, 7], [8, 10, 11, 9, 6]],
    ("T2", "in"): [[1, 3, 5, 7, 9, 11], [2, 4, 6, 8, 10]],
    ("T2", "pre"): [[3, 1, 5, 9, 7, 11], [6, 2, 4, 8, 10]],
    ("T2", "post"): [[1, 5, 3, 7, 11, 9], [2, 4, 8, 10, 6]],
    ("T3", "in"): [[1, 2, 3, 4, 5, 6], [7, 8, 9, 10, 11]],
    ("T3", "pre"): [[4, 2, 1, 3, 6, 5], [9, 8, 7, 11, 10]],
    ("T3", "post"): [[1, 3, 2, 5, 6, 4], [7, 8, 10, 11, 9]],
    ("T4", "in"): [[1, 3, 5, 7, 9, 11], [2, 4, 6, 8, 10]],
    ("T4", "pre"): [[7, 3, 1, 5, 11, 9], [6, 4, 2, 10, 8]],
    # printed as [2, 4, 9, 10, 6]; 9 belongs to the first chunk
    ("T4", "post"): [[1, 5, 3, 9, 11, 7], [2, 4, 8, 10, 6]],
}
PRINTED_T4_POST_SECOND = [2, 4, 9, 10, 6]

PRE_1_11 = [6, 3, 2, 1, 5, 4, 9, 8, 7, 11, 10]
POST_1_11 = [1, 2, 4, 5, 3, 7, 8, 10, 11, 9, 6]
