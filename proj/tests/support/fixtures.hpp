#pragma once

// Synthetic stand-ins for the NSW trial and PSID comparison files. The column
// layout matches the public distribution; the values are simulated.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

namespace fixtures {

inline const char* kNswHeader = "treat,age,education,black,hispanic,married,nodegree,re74,re75,re78";

struct Person {
  double age, educ, black, hisp, married, nodegree, re74, re75;
};

inline double earnings(std::mt19937_64& rng, double p_zero, double scale) {
  std::bernoulli_distribution zero(p_zero);
  std::gamma_distribution<double> g(1.5, scale / 1.5);
  return zero(rng) ? 0.0 : std::round(g(rng));
}

inline Person draw_nsw(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> age(17, 55);
  std::uniform_int_distribution<int> educ(3, 16);
  std::bernoulli_distribution black(0.8), hisp(0.1), married(0.17);
  Person p{};
  p.age = age(rng);
  p.educ = educ(rng);
  p.black = black(rng);
  p.hisp = p.black > 0 ? 0.0 : static_cast<double>(hisp(rng));
  p.married = married(rng);
  p.nodegree = p.educ < 12 ? 1.0 : 0.0;
  p.re74 = earnings(rng, 0.7, 3000.0);
  p.re75 = earnings(rng, 0.6, 2500.0);
  return p;
}

inline Person draw_psid(std::mt19937_64& rng, bool comparable) {
  if (comparable) return draw_nsw(rng);
  std::uniform_int_distribution<int> age(25, 55);
  std::uniform_int_distribution<int> educ(8, 17);
  std::bernoulli_distribution black(0.25), hisp(0.05), married(0.85);
  Person p{};
  p.age = age(rng);
  p.educ = educ(rng);
  p.black = black(rng);
  p.hisp = p.black > 0 ? 0.0 : static_cast<double>(hisp(rng));
  p.married = married(rng);
  p.nodegree = p.educ < 12 ? 1.0 : 0.0;
  p.re74 = earnings(rng, 0.1, 15000.0);
  p.re75 = earnings(rng, 0.1, 15000.0);
  return p;
}

inline double outcome(std::mt19937_64& rng, const Person& p, double treat, double shift) {
  std::normal_distribution<double> noise(0.0, 3000.0);
  const double mean = 3000.0 + 150.0 * (p.educ - 10.0) + 30.0 * (p.age - 25.0) + 0.4 * p.re75 +
                      0.2 * p.re74 - 600.0 * p.black + 1700.0 * treat + shift;
  return std::round(std::max(0.0, mean + noise(rng)));
}

inline void write_row(std::ofstream& f, int treat, const Person& p, double y) {
  f << treat << ',' << p.age << ',' << p.educ << ',' << p.black << ',' << p.hisp << ','
    << p.married << ',' << p.nodegree << ',' << p.re74 << ',' << p.re75 << ',' << y << '\n';
}

// 185 treated and 260 controls.
inline void write_nsw(const std::filesystem::path& path, std::uint64_t seed = 1974) {
  std::mt19937_64 rng(seed);
  std::ofstream f(path);
  f << kNswHeader << '\n';
  for (int i = 0; i < 445; ++i) {
    const int treat = i < 185 ? 1 : 0;
    const Person p = draw_nsw(rng);
    write_row(f, treat, p, outcome(rng, p, treat, 0.0));
  }
}

// 123 untreated rows; a minority resemble the trial population and the rest
// are older, married, higher earners with an outcome shift.
inline void write_psid(const std::filesystem::path& path, std::uint64_t seed = 1975) {
  std::mt19937_64 rng(seed);
  std::ofstream f(path);
  f << kNswHeader << '\n';
  for (int i = 0; i < 123; ++i) {
    const bool comparable = i % 3 == 0;
    const Person p = draw_psid(rng, comparable);
    write_row(f, 0, p, outcome(rng, p, 0.0, comparable ? 0.0 : 2500.0));
  }
}

}  // namespace fixtures
