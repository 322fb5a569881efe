#pragma once

#include <compare>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace p2pgrid::market {

// Absolute tolerance for kW comparisons inside the clearing engine.
inline constexpr double kPowerTolerance = 1e-9;

class ProsumerId {
public:
  ProsumerId() = default;
  explicit ProsumerId(std::string value) : value_(std::move(value)) {}

  const std::string& str() const noexcept { return value_; }

  friend auto operator<=>(const ProsumerId&, const ProsumerId&) = default;
  friend bool operator==(const ProsumerId&, const ProsumerId&) = default;

private:
  std::string value_;
};

struct Offer {
  ProsumerId seller;
  double price = 0.0;     // ¢/kWh
  double quantity = 0.0;  // kW
  int bcro = 1;

  friend bool operator==(const Offer&, const Offer&) = default;
};

struct Bid {
  ProsumerId buyer;
  double price = 0.0;     // ¢/kWh
  double quantity = 0.0;  // kW
  int bcro = 1;

  friend bool operator==(const Bid&, const Bid&) = default;
};

struct Transaction {
  int index = 0;  // 1-based emission order
  ProsumerId seller;
  ProsumerId buyer;
  double power = 0.0;  // kW
  double price = 0.0;  // ¢/kWh

  friend bool operator==(const Transaction&, const Transaction&) = default;
};

using PowerByProsumer = std::map<ProsumerId, double>;

struct MarketResult {
  std::vector<Transaction> transactions;
  PowerByProsumer seller_curtailed;  // only participants with a non-zero reduction
  PowerByProsumer buyer_curtailed;
  std::map<ProsumerId, double> avg_seller_price;
  std::map<ProsumerId, double> avg_buyer_price;
  std::map<ProsumerId, int> txn_count_per_seller;
  std::map<ProsumerId, int> txn_count_per_buyer;

  double traded_power() const;

  friend bool operator==(const MarketResult&, const MarketResult&) = default;
};

struct BalancedBook {
  std::vector<Offer> offers;  // exhausted participants removed
  std::vector<Bid> bids;
  PowerByProsumer seller_curtailed;
  PowerByProsumer buyer_curtailed;
};

// Ascending price, then BCRO, then id. Throws InvalidInput on duplicate sellers or
// on any offer violating price >= 0, quantity > 0, bcro >= 1.
std::vector<Offer> sort_sellers(std::vector<Offer> offers);

// Ascending BCRO. Throws InvalidInput on duplicate BCRO or duplicate buyer.
std::vector<Bid> sort_buyers(std::vector<Bid> bids);

// Closes the supply/demand gap by partially reducing the most expensive sellers
// (excess supply) or the last registered buyers (excess demand). Inputs must
// already be sorted.
BalancedBook balance_power(std::vector<Offer> sorted_offers, std::vector<Bid> sorted_bids);

// Mid-market rate: (seller_price + buyer_price) / 2.
double mmr_price(double seller_price, double buyer_price);

// Sort, balance and match: each buyer in registration order buys from the
// cheapest seller with remaining supply until its demand is met.
MarketResult clear_market(std::vector<Offer> offers, std::vector<Bid> bids);

}  // namespace p2pgrid::market
