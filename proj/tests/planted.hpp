#pragma once

// Random mass-action systems with planted conservation laws, shared by the
// unit tests and the acceptance runner.

#include "tropored/model.hpp"
#include "tropored/scaling.hpp"

#include <algorithm>
#include <random>
#include <string>
#include <vector>

namespace planted {

struct Case {
  tropored::PolySystem system;
  std::vector<tropored::Rational> d;
  tropored::OrderMap e;
  std::vector<std::vector<int>> laws;  // planted left-kernel vectors of the fast reactions
};

// Reactions come in two kinds: fast ones whose stoichiometric vectors are
// orthogonal to every planted law, and a few slow ones (large parameter
// order) that usually break some laws, leaving approximate ones behind.
inline Case make_case(std::mt19937_64& rng) {
  using tropored::Rational;
  std::uniform_int_distribution<int> nspec(3, 6), coin(0, 1), small(-1, 1), weight(1, 2);
  const int n = nspec(rng);
  Case c;

  // Planted laws: disjoint pools with small positive weights.
  std::vector<int> species(n);
  for (int i = 0; i < n; ++i) species[i] = i;
  std::shuffle(species.begin(), species.end(), rng);
  int pools = n >= 5 ? 2 : 1;
  int pos = 0;
  for (int p = 0; p < pools; ++p) {
    int size = p + 1 == pools ? std::min(3, n - pos) : 2;
    if (size < 2) break;
    std::vector<int> law(n, 0);
    for (int k = 0; k < size; ++k) law[species[pos + k]] = weight(rng);
    pos += size;
    c.laws.push_back(law);
  }

  auto orthogonal = [&](std::vector<int> s) {
    for (const auto& l : c.laws) {
      long ls = 0, ll = 0;
      for (int i = 0; i < n; ++i) {
        ls += static_cast<long>(l[i]) * s[i];
        ll += static_cast<long>(l[i]) * l[i];
      }
      for (int i = 0; i < n; ++i) s[i] = static_cast<int>(ll * s[i] - ls * l[i]);
    }
    return s;
  };

  std::vector<std::vector<int>> columns;
  std::vector<bool> slow;
  std::uniform_int_distribution<int> nfast(n, n + 3), nslow(0, 2);
  int fast = nfast(rng), sl = nslow(rng);
  for (int guard = 0; static_cast<int>(columns.size()) < fast + sl && guard < 200; ++guard) {
    bool is_slow = static_cast<int>(columns.size()) >= fast;
    std::vector<int> s(n);
    for (auto& v : s) v = small(rng);
    if (!is_slow) s = orthogonal(s);
    if (std::none_of(s.begin(), s.end(), [](int v) { return v < 0; })) continue;
    columns.push_back(s);
    slow.push_back(is_slow);
  }

  std::vector<std::string> names;
  for (int i = 0; i < n; ++i) names.push_back("x" + std::to_string(i + 1));
  std::vector<tropored::Parameter> params;
  std::vector<tropored::Rate> rates;
  tropored::RationalMatrix S(static_cast<std::size_t>(n), columns.size());
  std::uniform_int_distribution<int> fast_order(0, 1);
  for (std::size_t j = 0; j < columns.size(); ++j) {
    std::string k = "k" + std::to_string(j + 1);
    params.push_back({k, 1.0});
    c.e[k] = slow[j] ? Rational(4) : Rational(fast_order(rng));
    // Mass action: every consumed species is a reactant.
    std::vector<tropored::Monomial::Factor> f;
    for (int i = 0; i < n; ++i)
      if (columns[j][static_cast<std::size_t>(i)] < 0) f.emplace_back(names[static_cast<std::size_t>(i)], 1);
    rates.push_back({tropored::Monomial::var(k), tropored::Monomial(f)});
    for (int i = 0; i < n; ++i) S(static_cast<std::size_t>(i), j) = Rational(columns[j][static_cast<std::size_t>(i)]);
  }
  c.system = tropored::PolySystem(names, params, rates, S);
  std::uniform_int_distribution<int> dorder(-1, 1);
  for (int i = 0; i < n; ++i) c.d.emplace_back(dorder(rng));
  return c;
}

}  // namespace planted
