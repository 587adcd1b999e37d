// RULA worksheet tables A, B and C.

#include <algorithm>
#include <string>

#include "ergocam/ergonomics.hpp"
#include "ergocam/error.hpp"

namespace ergocam {

namespace {

// [upper arm 1..6][lower arm 1..3][wrist 1..4 x twist 1..2]
constexpr int kTableA[6][3][8] = {
    {{1, 2, 2, 2, 2, 3, 3, 3}, {2, 2, 2, 2, 3, 3, 3, 3}, {2, 3, 3, 3, 3, 3, 4, 4}},
    {{2, 3, 3, 3, 3, 4, 4, 4}, {3, 3, 3, 3, 3, 4, 4, 4}, {3, 4, 4, 4, 4, 4, 5, 5}},
    {{3, 3, 4, 4, 4, 4, 5, 5}, {3, 4, 4, 4, 4, 4, 5, 5}, {4, 4, 4, 4, 4, 5, 5, 5}},
    {{4, 4, 4, 4, 4, 5, 5, 5}, {4, 4, 4, 4, 4, 5, 5, 5}, {4, 4, 4, 5, 5, 5, 6, 6}},
    {{5, 5, 5, 5, 5, 6, 6, 7}, {5, 6, 6, 6, 6, 7, 7, 7}, {6, 6, 6, 7, 7, 7, 7, 8}},
    {{7, 7, 7, 7, 7, 8, 8, 9}, {8, 8, 8, 8, 8, 9, 9, 9}, {9, 9, 9, 9, 9, 9, 9, 9}},
};

// [neck 1..6][trunk 1..6 x legs 1..2]
constexpr int kTableB[6][12] = {
    {1, 3, 2, 3, 3, 4, 5, 5, 6, 6, 7, 7}, {2, 3, 2, 3, 4, 5, 5, 5, 6, 7, 7, 7},
    {3, 3, 3, 4, 4, 5, 5, 6, 6, 7, 7, 7}, {5, 5, 5, 6, 6, 7, 7, 7, 7, 7, 8, 8},
    {7, 7, 7, 7, 7, 8, 8, 8, 8, 8, 8, 8}, {8, 8, 8, 8, 8, 8, 8, 9, 9, 9, 9, 9},
};

// [wrist/arm score 1..8+][neck/trunk/leg score 1..7+]
constexpr int kTableC[8][7] = {
    {1, 2, 3, 3, 4, 5, 5}, {2, 2, 3, 4, 4, 5, 5}, {3, 3, 3, 4, 4, 5, 6}, {3, 3, 3, 4, 5, 6, 6},
    {4, 4, 4, 5, 6, 7, 7}, {4, 4, 5, 6, 6, 7, 7}, {5, 5, 6, 6, 7, 7, 7}, {5, 5, 6, 7, 7, 7, 7},
};

void check_range(const char* what, int v, int lo, int hi) {
  if (v < lo || v > hi) {
    throw Error(ErrorCode::kValidation, std::string("RULA ") + what + " score " + std::to_string(v) +
                                            " outside [" + std::to_string(lo) + ", " +
                                            std::to_string(hi) + "]");
  }
}

}  // namespace

int rula_table_a(int upper_arm, int lower_arm, int wrist, int wrist_twist) {
  check_range("upper arm", upper_arm, 1, 6);
  check_range("lower arm", lower_arm, 1, 3);
  check_range("wrist", wrist, 1, 4);
  check_range("wrist twist", wrist_twist, 1, 2);
  return kTableA[upper_arm - 1][lower_arm - 1][(wrist - 1) * 2 + (wrist_twist - 1)];
}

int rula_table_b(int neck, int trunk, int legs) {
  check_range("neck", neck, 1, 6);
  check_range("trunk", trunk, 1, 6);
  check_range("legs", legs, 1, 2);
  return kTableB[neck - 1][(trunk - 1) * 2 + (legs - 1)];
}

int rula_table_c(int wrist_arm, int neck_trunk_leg) {
  check_range("wrist/arm", wrist_arm, 1, 99);
  check_range("neck/trunk/leg", neck_trunk_leg, 1, 99);
  return kTableC[std::min(wrist_arm, 8) - 1][std::min(neck_trunk_leg, 7) - 1];
}

}  // namespace ergocam
