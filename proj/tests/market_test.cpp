#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "p2pgrid/errors.hpp"
#include "p2pgrid/market.hpp"
#include "test_support.hpp"

using namespace p2pgrid::market;
using p2pgrid::InvalidInput;

namespace {

ProsumerId id(const char* s) { return ProsumerId(s); }

// Reference prices and registration order with quantities sized so that supply
// and demand both total 11.4 kW.
std::vector<Offer> reference_offers() {
  return {{id("S1"), 17, 3.7, 4}, {id("S2"), 15, 4.2, 5}, {id("S3"), 16, 3.5, 3}};
}
std::vector<Bid> reference_bids() { return {{id("B1"), 15, 6.4, 2}, {id("B2"), 14, 5.0, 1}}; }

std::vector<std::string> seller_ids(const std::vector<Offer>& v) {
  std::vector<std::string> out;
  for (const auto& o : v) out.push_back(o.seller.str());
  return out;
}

}  // namespace

TEST(SortSellers, OrdersByDeclaredPrice) {
  EXPECT_EQ(seller_ids(sort_sellers(reference_offers())), (std::vector<std::string>{"S2", "S3", "S1"}));
}

TEST(SortSellers, SingleOfferIsIdentity) {
  std::vector<Offer> one{{id("S"), 12, 1.0, 1}};
  EXPECT_EQ(sort_sellers(one), one);
}

TEST(SortSellers, PriceTieBrokenByBcroThenId) {
  auto sorted = sort_sellers({{id("A"), 15, 1.0, 4}, {id("B"), 15, 1.0, 2}});
  EXPECT_EQ(seller_ids(sorted), (std::vector<std::string>{"B", "A"}));
  sorted = sort_sellers({{id("Z"), 15, 1.0, 2}, {id("Y"), 15, 1.0, 2}});
  EXPECT_EQ(seller_ids(sorted), (std::vector<std::string>{"Y", "Z"}));
}

TEST(SortSellers, RejectsDuplicatesAndBadOffers) {
  EXPECT_THROW(sort_sellers({{id("S"), 15, 1.0, 1}, {id("S"), 16, 1.0, 2}}), InvalidInput);
  EXPECT_THROW(sort_sellers({{id("S"), -1, 1.0, 1}}), InvalidInput);
  EXPECT_THROW(sort_sellers({{id("S"), 15, 0.0, 1}}), InvalidInput);
  EXPECT_THROW(sort_sellers({{id("S"), 15, 1.0, 0}}), InvalidInput);
}

TEST(SortBuyers, OrdersByRegistration) {
  auto sorted = sort_buyers(reference_bids());
  ASSERT_EQ(sorted.size(), 2u);
  EXPECT_EQ(sorted[0].buyer, id("B2"));
  EXPECT_EQ(sorted[1].buyer, id("B1"));

  sorted = sort_buyers({{id("a"), 15, 1, 5}, {id("b"), 15, 1, 3}, {id("c"), 15, 1, 9}});
  EXPECT_EQ(sorted[0].bcro, 3);
  EXPECT_EQ(sorted[1].bcro, 5);
  EXPECT_EQ(sorted[2].bcro, 9);

  std::vector<Bid> one{{id("x"), 15, 1, 7}};
  EXPECT_EQ(sort_buyers(one), one);
}

TEST(SortBuyers, DuplicateBcroRejected) {
  EXPECT_THROW(sort_buyers({{id("a"), 15, 1, 2}, {id("b"), 14, 1, 2}}), InvalidInput);
}

TEST(BalancePower, BalancedBookUntouched) {
  // Three sellers against four buyers, 11.4 kW each side.
  auto book = balance_power(sort_sellers({{id("S2"), 15, 4.2, 5}, {id("S1"), 17, 3.7, 4}, {id("S3"), 16, 3.5, 3}}),
                            sort_buyers({{id("B2"), 14, 2.8, 1},
                                         {id("B1"), 15, 1.4, 2},
                                         {id("B4"), 16, 3.7, 6},
                                         {id("B3"), 15.5, 3.5, 7}}));
  EXPECT_TRUE(book.seller_curtailed.empty());
  EXPECT_TRUE(book.buyer_curtailed.empty());
  EXPECT_EQ(book.offers.size(), 3u);
  EXPECT_EQ(book.bids.size(), 4u);
}

TEST(BalancePower, ExcessSupplyCutsMostExpensiveSeller) {
  // 4.2 + 4.3 + 3.5 = 12.0 offered against 11.4 demanded.
  auto book = balance_power(sort_sellers({{id("S1"), 17, 4.3, 4}, {id("S2"), 15, 4.2, 5}, {id("S3"), 16, 3.5, 3}}),
                            sort_buyers(reference_bids()));
  ASSERT_EQ(book.seller_curtailed.size(), 1u);
  EXPECT_NEAR(book.seller_curtailed.at(id("S1")), 0.6, 1e-12);
  EXPECT_NEAR(book.offers.back().quantity, 3.7, 1e-12);
  EXPECT_TRUE(book.buyer_curtailed.empty());
}

TEST(BalancePower, ExcessDemandCutsLastRegisteredBuyer) {
  // 10.0 kW offered against 11.4 kW demanded; B1 registered last.
  auto book = balance_power(sort_sellers({{id("S1"), 17, 2.3, 4}, {id("S2"), 15, 4.2, 5}, {id("S3"), 16, 3.5, 3}}),
                            sort_buyers(reference_bids()));
  ASSERT_EQ(book.buyer_curtailed.size(), 1u);
  EXPECT_NEAR(book.buyer_curtailed.at(id("B1")), 1.4, 1e-12);
  EXPECT_NEAR(book.bids.back().quantity, 5.0, 1e-12);
}

TEST(BalancePower, ExhaustedParticipantsDropped) {
  auto book = balance_power(sort_sellers({{id("A"), 10, 1.0, 1}, {id("B"), 11, 0.5, 2}, {id("C"), 12, 0.5, 3}}),
                            sort_buyers({{id("X"), 10, 1.2, 4}}));
  ASSERT_EQ(book.offers.size(), 2u);
  EXPECT_NEAR(book.offers[1].quantity, 0.2, 1e-12);
  EXPECT_NEAR(book.seller_curtailed.at(id("C")), 0.5, 1e-12);
  EXPECT_NEAR(book.seller_curtailed.at(id("B")), 0.3, 1e-12);
}

TEST(BalancePower, OneEmptySideCurtailsEverything) {
  auto book = balance_power({}, sort_buyers(reference_bids()));
  EXPECT_TRUE(book.bids.empty());
  EXPECT_NEAR(book.buyer_curtailed.at(id("B1")), 6.4, 1e-12);
  EXPECT_NEAR(book.buyer_curtailed.at(id("B2")), 5.0, 1e-12);
}

TEST(MmrPrice, Midpoint) {
  EXPECT_EQ(mmr_price(17, 15), 16.0);
  EXPECT_EQ(mmr_price(15, 14), 14.5);
  EXPECT_EQ(mmr_price(13.25, 13.25), 13.25);
  EXPECT_THROW(mmr_price(-1, 15), InvalidInput);
  EXPECT_THROW(mmr_price(15, -0.5), InvalidInput);
}

TEST(MmrPrice, RandomPairsStayInsideTheirBox) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> price(0.0, 60.0);
  for (int i = 0; i < 10000; ++i) {
    const double cs = price(rng), cb = price(rng);
    const double p = mmr_price(cs, cb);
    ASSERT_EQ(p, (cs + cb) / 2.0);
    ASSERT_GE(p, std::min(cs, cb));
    ASSERT_LE(p, std::max(cs, cb));
  }
}

TEST(ClearMarket, FiveParticipantTrace) {
  const auto r = clear_market(reference_offers(), reference_bids());
  ASSERT_EQ(r.transactions.size(), 4u);
  struct Want {
    const char* s;
    const char* b;
    double kw;
    double price;
  };
  const Want want[] = {{"S2", "B2", 4.2, 14.5}, {"S3", "B2", 0.8, 15.0}, {"S3", "B1", 2.7, 15.5}, {"S1", "B1", 3.7, 16.0}};
  for (int k = 0; k < 4; ++k) {
    EXPECT_EQ(r.transactions[k].index, k + 1);
    EXPECT_EQ(r.transactions[k].seller.str(), want[k].s);
    EXPECT_EQ(r.transactions[k].buyer.str(), want[k].b);
    EXPECT_NEAR(r.transactions[k].power, want[k].kw, 1e-12);
    EXPECT_EQ(r.transactions[k].price, want[k].price);
  }
  EXPECT_EQ(r.avg_buyer_price.at(id("B2")), 14.75);
  EXPECT_EQ(r.avg_seller_price.at(id("S3")), 15.25);
  EXPECT_EQ(r.avg_buyer_price.at(id("B1")), 15.75);
  EXPECT_EQ(r.txn_count_per_seller.at(id("S3")), 2);
  EXPECT_EQ(r.txn_count_per_buyer.at(id("B1")), 2);
  EXPECT_TRUE(r.seller_curtailed.empty());
  EXPECT_TRUE(r.buyer_curtailed.empty());
}

TEST(ClearMarket, SymmetricSingleMatch) {
  const auto r = clear_market({{id("S"), 15, 3, 1}}, {{id("B"), 15, 3, 2}});
  ASSERT_EQ(r.transactions.size(), 1u);
  EXPECT_EQ(r.transactions[0].power, 3.0);
  EXPECT_EQ(r.transactions[0].price, 15.0);
}

TEST(ClearMarket, NoSupplyCurtailsAllDemand) {
  const auto r = clear_market({}, reference_bids());
  EXPECT_TRUE(r.transactions.empty());
  EXPECT_NEAR(r.buyer_curtailed.at(id("B1")), 6.4, 1e-12);
  EXPECT_NEAR(r.buyer_curtailed.at(id("B2")), 5.0, 1e-12);
  EXPECT_TRUE(clear_market({}, {}).transactions.empty());
}

TEST(ClearMarket, RoleExclusivityEnforced) {
  EXPECT_THROW(clear_market({{id("P"), 15, 1, 1}}, {{id("P"), 15, 1, 2}}), InvalidInput);
}

TEST(ClearMarket, PropagatesSortErrors) {
  EXPECT_THROW(clear_market({{id("S"), 15, 1, 1}}, {{id("A"), 15, 1, 2}, {id("B"), 15, 1, 2}}), InvalidInput);
}

TEST(ClearMarketProperties, RandomBooks) {
  std::mt19937_64 rng(20240611);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto book = testing_support::random_book(rng);
    const auto r = clear_market(book.offers, book.bids);

    double offered = 0, bid = 0;
    for (const auto& o : book.offers) offered += o.quantity;
    for (const auto& b : book.bids) bid += b.quantity;
    ASSERT_LE(r.traded_power(), std::min(offered, bid) + 1e-9);

    // Allocation completeness.
    for (const auto& o : book.offers) {
      double sold = 0;
      for (const auto& t : r.transactions)
        if (t.seller == o.seller) sold += t.power;
      const double cut = r.seller_curtailed.count(o.seller) ? r.seller_curtailed.at(o.seller) : 0.0;
      ASSERT_NEAR(sold + cut, o.quantity, 1e-9);
    }
    for (const auto& b : book.bids) {
      double bought = 0;
      for (const auto& t : r.transactions)
        if (t.buyer == b.buyer) bought += t.power;
      const double cut = r.buyer_curtailed.count(b.buyer) ? r.buyer_curtailed.at(b.buyer) : 0.0;
      ASSERT_NEAR(bought + cut, b.quantity, 1e-9);
    }

    // Price box and per-buyer seller monotonicity.
    std::map<ProsumerId, double> last_seller_price;
    for (const auto& t : r.transactions) {
      const auto& o = *std::find_if(book.offers.begin(), book.offers.end(), [&](auto& x) { return x.seller == t.seller; });
      const auto& b = *std::find_if(book.bids.begin(), book.bids.end(), [&](auto& x) { return x.buyer == t.buyer; });
      ASSERT_GE(t.price, std::min(o.price, b.price));
      ASSERT_LE(t.price, std::max(o.price, b.price));
      ASSERT_GT(t.power, 0.0);
      auto it = last_seller_price.find(t.buyer);
      if (it != last_seller_price.end()) ASSERT_GE(o.price, it->second);
      last_seller_price[t.buyer] = o.price;
    }

    // Order invariance.
    auto offers = book.offers;
    auto bids = book.bids;
    std::shuffle(offers.begin(), offers.end(), rng);
    std::shuffle(bids.begin(), bids.end(), rng);
    ASSERT_EQ(clear_market(offers, bids), r);
  }
}

TEST(BalancePowerProperties, SidesBalance) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto book = testing_support::random_book(rng);
    const auto balanced = balance_power(sort_sellers(book.offers), sort_buyers(book.bids));
    double s = 0, d = 0;
    for (const auto& o : balanced.offers) s += o.quantity;
    for (const auto& b : balanced.bids) d += b.quantity;
    ASSERT_NEAR(s, d, 1e-9);
  }
}

TEST(ClearMarketOracle, MatchesStraightLineTranscription) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto book = testing_support::random_book(rng);
    const auto got = clear_market(book.offers, book.bids);
    const auto want = oracle::clear(testing_support::to_oracle(book.offers), testing_support::to_oracle(book.bids));
    ASSERT_EQ(testing_support::compare_with_oracle(got, want), "") << "trial " << trial;
  }
}
