#pragma once

// Straight-line transcription of the rule-based clearing loop, used only as a
// test oracle. Deliberately shares no code with the library: index-array
// selection sort, prefix-fill balancing and a two-pointer match.

#include <string>
#include <vector>

namespace oracle {

struct Order {
  std::string id;
  double price;
  double kw;
  int bcro;
};

struct Trade {
  std::string seller;
  std::string buyer;
  double kw;
  double price;
};

struct Curtail {
  std::string id;
  double kw;
};

struct Clearing {
  std::vector<Trade> trades;
  std::vector<Curtail> seller_cut;
  std::vector<Curtail> buyer_cut;
};

inline bool seller_before(const Order& a, const Order& b) {
  if (a.price < b.price) return true;
  if (a.price > b.price) return false;
  if (a.bcro < b.bcro) return true;
  if (a.bcro > b.bcro) return false;
  return a.id < b.id;
}

inline std::vector<Order> selection_sort(std::vector<Order> v, bool sellers) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::size_t best = i;
    for (std::size_t k = i + 1; k < v.size(); ++k) {
      const bool earlier = sellers ? seller_before(v[k], v[best]) : v[k].bcro < v[best].bcro;
      if (earlier) best = k;
    }
    std::swap(v[i], v[best]);
  }
  return v;
}

inline Clearing clear(std::vector<Order> sellers, std::vector<Order> buyers) {
  const double eps = 1e-9;
  sellers = selection_sort(sellers, true);
  buyers = selection_sort(buyers, false);

  double supply = 0.0, demand = 0.0;
  for (auto& s : sellers) supply += s.kw;
  for (auto& b : buyers) demand += b.kw;
  const double cap = supply < demand ? supply : demand;

  Clearing out;
  // Prefix fill: the first participants in priority order keep their whole
  // quantity until the common cap is reached.
  std::vector<double> sell_alloc(sellers.size()), buy_alloc(buyers.size());
  double used = 0.0;
  for (std::size_t i = 0; i < sellers.size(); ++i) {
    double room = cap - used;
    if (room < 0) room = 0;
    sell_alloc[i] = sellers[i].kw < room ? sellers[i].kw : room;
    used += sell_alloc[i];
    if (sellers[i].kw - sell_alloc[i] > eps) out.seller_cut.push_back({sellers[i].id, sellers[i].kw - sell_alloc[i]});
  }
  used = 0.0;
  for (std::size_t j = 0; j < buyers.size(); ++j) {
    double room = cap - used;
    if (room < 0) room = 0;
    buy_alloc[j] = buyers[j].kw < room ? buyers[j].kw : room;
    used += buy_alloc[j];
    if (buyers[j].kw - buy_alloc[j] > eps) out.buyer_cut.push_back({buyers[j].id, buyers[j].kw - buy_alloc[j]});
  }

  std::size_t i = 0, j = 0;
  while (i < sellers.size() && j < buyers.size()) {
    if (sell_alloc[i] <= eps) { ++i; continue; }
    if (buy_alloc[j] <= eps) { ++j; continue; }
    const double kw = sell_alloc[i] < buy_alloc[j] ? sell_alloc[i] : buy_alloc[j];
    out.trades.push_back({sellers[i].id, buyers[j].id, kw, (sellers[i].price + buyers[j].price) / 2.0});
    sell_alloc[i] -= kw;
    buy_alloc[j] -= kw;
  }
  return out;
}

}  // namespace oracle
