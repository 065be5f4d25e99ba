#pragma once

// Risk graph as printed: rows S1E1..S3E4, columns C1..C3. The S3/E1/C3 cell
// reads "A/QM"; it is stored here with its default value A.

namespace asil_golden {

inline constexpr const char* kTable[12][3] = {
    {"QM", "QM", "QM"}, {"QM", "QM", "QM"}, {"QM", "QM", "A"},  {"QM", "A", "B"},
    {"QM", "QM", "QM"}, {"QM", "QM", "A"},  {"QM", "A", "B"},   {"A", "B", "C"},
    {"QM", "QM", "A"},  {"QM", "A", "B"},   {"A", "B", "C"},    {"B", "C", "D"},
};

inline const char* cell(int s, int e, int c) { return kTable[(s - 1) * 4 + (e - 1)][c - 1]; }

inline bool is_dual_cell(int s, int e, int c) { return s == 3 && e == 1 && c == 3; }

}  // namespace asil_golden
