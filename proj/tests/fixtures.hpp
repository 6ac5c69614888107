#pragma once

// Networks shared by the unit and acceptance suites.

#include <string>
#include <vector>

#include "evsynth/network.hpp"
#include "evsynth/synthetic.hpp"

namespace evsynth::fixtures {

inline Study make_study(std::string id, Design design, std::vector<Arm> arms) {
  return Study{std::move(id), design, std::move(arms)};
}

// One RCT, two arms: r = (10, 5), E = (20, 20).
inline Network one_study() {
  Network net;
  net.treatments = {"A", "B"};
  net.studies.push_back(make_study("S1", Design::Rct, {{0, 10, 20.0}, {1, 5, 20.0}}));
  return net;
}

// Three treatments, RCTs and RWE, including a three-arm RCT.
inline Network mixed_three() {
  Network net;
  net.treatments = {"placebo", "X", "Y"};
  net.studies.push_back(make_study("R1", Design::Rct, {{0, 40, 100.0}, {1, 25, 98.0}}));
  net.studies.push_back(make_study("R2", Design::Rct, {{0, 33, 90.0}, {1, 20, 91.0}, {2, 24, 88.0}}));
  net.studies.push_back(make_study("R3", Design::Rct, {{1, 18, 60.0}, {2, 21, 61.0}}));
  net.studies.push_back(make_study("W1", Design::Rwe, {{0, 50, 150.0}, {2, 38, 140.0}}));
  net.studies.push_back(make_study("W2", Design::Rwe, {{1, 12, 70.0}, {2, 15, 75.0}}));
  return net;
}

// Star around placebo with a head-to-head RWE study.
inline Network star_four() {
  Network net;
  net.treatments = {"placebo", "A", "B", "C"};
  net.studies.push_back(make_study("T1", Design::Rct, {{0, 60, 120.0}, {1, 30, 118.0}}));
  net.studies.push_back(make_study("T2", Design::Rct, {{0, 55, 110.0}, {2, 35, 112.0}}));
  net.studies.push_back(make_study("T3", Design::Rct, {{0, 48, 100.0}, {3, 40, 101.0}}));
  net.studies.push_back(make_study("T4", Design::Rct, {{0, 70, 130.0}, {1, 36, 125.0}}));
  net.studies.push_back(make_study("O1", Design::Rwe, {{1, 22, 80.0}, {2, 30, 85.0}}));
  net.studies.push_back(make_study("O2", Design::Rwe, {{0, 41, 90.0}, {3, 33, 95.0}}));
  return net;
}

// Zero counts and a four-arm RWE study.
inline Network sparse_multiarm() {
  Network net;
  net.treatments = {"ref", "P", "Q", "R"};
  net.studies.push_back(make_study("M1", Design::Rct, {{0, 0, 12.0}, {1, 2, 11.0}}));
  net.studies.push_back(make_study("M2", Design::Rct, {{0, 7, 30.0}, {2, 3, 29.0}, {3, 4, 31.0}}));
  net.studies.push_back(make_study("M3", Design::Rwe, {{0, 9, 40.0}, {1, 5, 38.0}, {2, 0, 35.0}, {3, 6, 37.0}}));
  net.studies.push_back(make_study("M4", Design::Rct, {{1, 4, 20.0}, {3, 8, 21.0}}));
  return net;
}

// A treatment ("Z") that only RWE reaches.
inline Network rwe_only_treatment() {
  Network net;
  net.treatments = {"placebo", "A", "Z"};
  net.studies.push_back(make_study("R1", Design::Rct, {{0, 30, 60.0}, {1, 20, 61.0}}));
  net.studies.push_back(make_study("R2", Design::Rct, {{0, 28, 58.0}, {1, 17, 57.0}}));
  net.studies.push_back(make_study("W1", Design::Rwe, {{1, 14, 40.0}, {2, 10, 42.0}}));
  return net;
}

// Synthetic network with RWE effects shifted +0.5 on the log scale.
inline TruthSpec conflicted_truth() {
  TruthSpec t;
  t.treatments = {"placebo", "A", "B", "C"};
  t.d = {0.0, -0.9, -0.5, -0.3};
  t.tau = 0.05;
  t.baseline_log_rate = {-0.6, -0.8, -0.5, -0.7};
  t.exposure = {400.0, 380.0, 420.0};
  t.layout = {
      {{0, 1}, 3, 3},
      {{0, 2}, 3, 3},
      {{0, 3}, 3, 3},
      {{1, 2}, 1, 1},
  };
  t.rwe_bias = {0.0, 0.5, 0.5, 0.5};
  return t;
}

}  // namespace evsynth::fixtures
