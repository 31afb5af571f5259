#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>

#include "covaropt/covaropt.hpp"
#include "covaropt/io.hpp"

using namespace covaropt;

TEST(Io, DocumentRoundTripsExactly) {
  const Instance inst = generate_instance(5, 7, 99);
  io::ProblemDocument d = io::document_from(inst);
  d.events.push_back({{0, 2}, std::nullopt});
  d.events.push_back({{1}, Vector::Constant(1, 0.05)});
  d.limits.rho_bar = {0.02, 0.03};
  d.limits.option_cap = 0.3;
  d.portfolio = Portfolio{Vector::LinSpaced(5, 0.0, 0.1), Vector::LinSpaced(7, -1.0, 1.0)};
  const io::json j = io::to_json(d);
  const io::ProblemDocument back = io::document_from(io::json::parse(j.dump()));
  EXPECT_EQ(io::to_json(back), j);
  EXPECT_EQ(back.model.sigma(), d.model.sigma());
  EXPECT_EQ(back.limits.sigma_bar, kInf);
  const P1Problem p = io::to_p1(back, 0.95, 0.95, RiskMode::normal);
  EXPECT_EQ(p.events.size(), 2u);
  EXPECT_EQ(p.rho_bar(1), 0.03);
}

TEST(Io, RejectsMalformedDocuments) {
  const Instance inst = generate_instance(2, 1, 1);
  io::json j = io::to_json(io::document_from(inst));
  j["options"][0]["underlying"] = 5;
  EXPECT_THROW(io::document_from(j), DimensionError);
  j = io::to_json(io::document_from(inst));
  j["options"][0]["kind"] = "straddle";
  EXPECT_THROW(io::document_from(j), DomainError);
}

TEST(Io, PriceCsv) {
  const auto path = std::filesystem::temp_directory_path() / "covaropt_prices.csv";
  {
    io::CsvWriter w(path.string(), {"date", "a", "b"});
    w.row(std::vector<std::string>{"2020-01-01", "1", "2"});
    w.row(std::vector<std::string>{"2020-01-08", "1.5", "2.5"});
  }
  const Matrix m = io::read_price_csv(path.string());
  EXPECT_EQ(m.rows(), 2);
  EXPECT_EQ(m(1, 1), 2.5);
  std::filesystem::remove(path);
}

TEST(Io, MarketSpecsRoundTrip) {
  GarchSpec g;
  g.rate = 0.03;
  g.stocks = {{4e-5, 0.05, 0.1, 0.85, 0.05}, {2e-5, 0.02, 0.06, 0.9, 0.0}};
  DccSpec d;
  d.beta1 = 0.04;
  d.beta2 = 0.93;
  d.uncond_corr = Matrix::Identity(2, 2);
  d.uncond_corr(0, 1) = d.uncond_corr(1, 0) = 0.4;
  d.innovation = DccInnovation::standardized;
  const GarchSpec g2 = io::garch_from(io::json::parse(io::to_json(g).dump()));
  const DccSpec d2 = io::dcc_from(io::json::parse(io::to_json(d).dump()));
  EXPECT_EQ(io::to_json(g2), io::to_json(g));
  EXPECT_EQ(io::to_json(d2), io::to_json(d));

  io::json bad = io::to_json(d);
  bad["beta2"] = 0.99;
  EXPECT_THROW(io::dcc_from(bad), DomainError);
  bad = io::to_json(d);
  bad["innovation"] = "scaled";
  EXPECT_THROW(io::dcc_from(bad), DomainError);
}

TEST(Io, StrategyFromJson) {
  const Strategy s = io::strategy_from(io::json::parse(R"({"kind": "optioned_control", "rho_bar": 0.002,
                                                           "mode": "worst-case", "n_sia": 3})"));
  EXPECT_EQ(s.kind, StrategyKind::optioned_control);
  EXPECT_TRUE(s.risk_on.use_options);
  EXPECT_DOUBLE_EQ(*s.risk_on.rho_bar, 0.002);
  EXPECT_EQ(s.mode, RiskMode::worst_case);
  EXPECT_EQ(s.n_sia, 3);
  EXPECT_EQ(io::to_json(io::strategy_from(io::to_json(s))), io::to_json(s));

  const Strategy ds = io::strategy_from(io::json::parse(R"({"kind": "discretion_optioned", "rho_bar": 0.01})"));
  EXPECT_DOUBLE_EQ(*ds.risk_off->rho_bar, 0.01);
  EXPECT_FALSE(ds.risk_on.rho_bar.has_value());

  EXPECT_THROW(io::strategy_from(io::json::parse(R"({"kind": "yolo"})")), DomainError);
  EXPECT_THROW(io::strategy_from(io::json::parse(R"({"kind": "stock_control", "rho_bar": null})")), DomainError);
}

TEST(Io, OptionSeriesCsvRoundTrip) {
  FeedConfig cfg;
  cfg.stocks = 2;
  cfg.history = 10;
  cfg.horizon = 6;
  cfg.spread = 0.02;
  cfg.roll_weeks = 4;
  GarchSpec g;
  g.stocks.assign(2, GjrGarch{4e-5, 0.05, 0.1, 0.85, 0.05});
  DccSpec d;
  d.beta1 = 0.05;
  d.beta2 = 0.9;
  d.uncond_corr = Matrix::Identity(2, 2);
  const BacktestFeed feed = simulate_feed(g, d, cfg, 3);
  const std::string path = (std::filesystem::temp_directory_path() / "covaropt_series.csv").string();
  io::write_option_series_csv(path, feed.options);
  const auto back = io::read_option_series_csv(path, feed.weeks());
  std::remove(path.c_str());
  ASSERT_EQ(back.size(), feed.options.size());
  for (std::size_t k = 0; k < back.size(); ++k) {
    EXPECT_EQ(back[k].contract.strike, feed.options[k].contract.strike);
    EXPECT_EQ(back[k].listed, feed.options[k].listed);
    EXPECT_EQ(back[k].last_trade, feed.options[k].last_trade);
    for (int t = 0; t < feed.weeks(); ++t) {
      EXPECT_EQ(back[k].quoted(t), feed.options[k].quoted(t));
      if (feed.options[k].quoted(t)) {
        EXPECT_EQ(back[k].bid(t), feed.options[k].bid(t));
        EXPECT_EQ(back[k].theta(t), feed.options[k].theta(t));
      }
    }
  }

  std::ofstream(path) << "series,underlying\n0,1\n";
  EXPECT_THROW(io::read_option_series_csv(path, 5), DomainError);
  std::remove(path.c_str());
}
