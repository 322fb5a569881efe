#include "p2pgrid/market.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "p2pgrid/errors.hpp"

namespace p2pgrid::market {
namespace {

void check_order(const std::string& who, double price, double quantity, int bcro) {
  if (!std::isfinite(price) || price < 0.0)
    throw InvalidInput("participant " + who + ": price must be >= 0");
  if (!std::isfinite(quantity) || quantity <= 0.0)
    throw InvalidInput("participant " + who + ": quantity must be > 0");
  if (bcro < 1) throw InvalidInput("participant " + who + ": bcro must be >= 1");
}

template <typename T>
double total_quantity(const std::vector<T>& orders) {
  return std::accumulate(orders.begin(), orders.end(), 0.0,
                         [](double acc, const T& o) { return acc + o.quantity; });
}

// Removes `excess` kW walking from the back of the list. Participants that hit
// zero are dropped; the marginal one keeps its reduced quantity.
template <typename T, typename IdOf>
void curtail_from_back(std::vector<T>& orders, double excess, PowerByProsumer& record, IdOf id_of) {
  while (excess > kPowerTolerance && !orders.empty()) {
    T& last = orders.back();
    const double cut = std::min(last.quantity, excess);
    last.quantity -= cut;
    excess -= cut;
    if (last.quantity <= kPowerTolerance) {
      record[id_of(last)] += cut + last.quantity;
      orders.pop_back();
    } else {
      record[id_of(last)] += cut;
    }
  }
}

}  // namespace

double MarketResult::traded_power() const {
  double sum = 0.0;
  for (const auto& t : transactions) sum += t.power;
  return sum;
}

std::vector<Offer> sort_sellers(std::vector<Offer> offers) {
  std::set<ProsumerId> seen;
  for (const auto& o : offers) {
    check_order(o.seller.str(), o.price, o.quantity, o.bcro);
    if (!seen.insert(o.seller).second) throw InvalidInput("duplicate seller " + o.seller.str());
  }
  std::sort(offers.begin(), offers.end(), [](const Offer& a, const Offer& b) {
    if (a.price != b.price) return a.price < b.price;
    if (a.bcro != b.bcro) return a.bcro < b.bcro;
    return a.seller < b.seller;
  });
  return offers;
}

std::vector<Bid> sort_buyers(std::vector<Bid> bids) {
  std::set<ProsumerId> seen_ids;
  std::set<int> seen_bcro;
  for (const auto& b : bids) {
    check_order(b.buyer.str(), b.price, b.quantity, b.bcro);
    if (!seen_ids.insert(b.buyer).second) throw InvalidInput("duplicate buyer " + b.buyer.str());
    if (!seen_bcro.insert(b.bcro).second)
      throw InvalidInput("duplicate buyer bcro " + std::to_string(b.bcro));
  }
  std::sort(bids.begin(), bids.end(), [](const Bid& a, const Bid& b) { return a.bcro < b.bcro; });
  return bids;
}

BalancedBook balance_power(std::vector<Offer> sorted_offers, std::vector<Bid> sorted_bids) {
  BalancedBook book;
  const double supply = total_quantity(sorted_offers);
  const double demand = total_quantity(sorted_bids);
  if (supply > demand + kPowerTolerance) {
    curtail_from_back(sorted_offers, supply - demand, book.seller_curtailed,
                      [](const Offer& o) { return o.seller; });
  } else if (demand > supply + kPowerTolerance) {
    curtail_from_back(sorted_bids, demand - supply, book.buyer_curtailed,
                      [](const Bid& b) { return b.buyer; });
  }
  book.offers = std::move(sorted_offers);
  book.bids = std::move(sorted_bids);
  return book;
}

double mmr_price(double seller_price, double buyer_price) {
  if (!(seller_price >= 0.0) || !(buyer_price >= 0.0))
    throw InvalidInput("mmr_price: prices must be >= 0");
  return (seller_price + buyer_price) / 2.0;
}

MarketResult clear_market(std::vector<Offer> offers, std::vector<Bid> bids) {
  {
    std::set<ProsumerId> sellers;
    for (const auto& o : offers) sellers.insert(o.seller);
    for (const auto& b : bids)
      if (sellers.count(b.buyer))
        throw InvalidInput("prosumer " + b.buyer.str() + " cannot both sell and buy in one interval");
  }

  BalancedBook book = balance_power(sort_sellers(std::move(offers)), sort_buyers(std::move(bids)));

  MarketResult result;
  result.seller_curtailed = std::move(book.seller_curtailed);
  result.buyer_curtailed = std::move(book.buyer_curtailed);

  std::vector<double> supply_left;
  supply_left.reserve(book.offers.size());
  for (const auto& o : book.offers) supply_left.push_back(o.quantity);

  std::size_t cheapest = 0;
  for (const auto& bid : book.bids) {
    double demand_left = bid.quantity;
    while (demand_left > kPowerTolerance && cheapest < book.offers.size()) {
      const Offer& offer = book.offers[cheapest];
      const double power = std::min(demand_left, supply_left[cheapest]);
      result.transactions.push_back(Transaction{static_cast<int>(result.transactions.size()) + 1,
                                                offer.seller, bid.buyer, power,
                                                mmr_price(offer.price, bid.price)});
      supply_left[cheapest] -= power;
      demand_left -= power;
      if (supply_left[cheapest] <= kPowerTolerance) ++cheapest;
    }
  }

  std::map<ProsumerId, double> seller_sum;
  std::map<ProsumerId, double> buyer_sum;
  for (const auto& t : result.transactions) {
    seller_sum[t.seller] += t.price;
    buyer_sum[t.buyer] += t.price;
    ++result.txn_count_per_seller[t.seller];
    ++result.txn_count_per_buyer[t.buyer];
  }
  for (const auto& [id, sum] : seller_sum) result.avg_seller_price[id] = sum / result.txn_count_per_seller[id];
  for (const auto& [id, sum] : buyer_sum) result.avg_buyer_price[id] = sum / result.txn_count_per_buyer[id];
  return result;
}

}  // namespace p2pgrid::market
