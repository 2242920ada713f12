#include <gtest/gtest.h>
#include <httplib.h>

#include "atal/service.hpp"
#include "engine_fixture.hpp"
#include "test_support.hpp"

namespace atal {
namespace {

using nlohmann::json;

std::vector<json> ndjson(const std::string& body) {
  std::vector<json> out;
  std::istringstream in(body);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(json::parse(line));
  }
  return out;
}

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = test::temp_dir(std::string("service_") + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    write_config(dir_ / "config.txt", test::tiny_config());
    port_ = service_.start_background("127.0.0.1");
    ASSERT_GT(port_, 0);
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
  }
  void TearDown() override { service_.stop(); }

  std::string open_session() {
    auto res = client_->Post("/sessions", json{{"experiment", dir_.string()}}.dump(), "application/json");
    EXPECT_TRUE(res);
    EXPECT_EQ(res->status, 201);
    const std::string id = json::parse(res->body).at("session_id");
    service_.wait_idle(id);
    return id;
  }

  std::vector<json> queries(const std::string& id, int limit = 100) {
    auto res = client_->Get("/sessions/" + id + "/queries?limit=" + std::to_string(limit));
    EXPECT_EQ(res->status, 200);
    return ndjson(res->body);
  }

  httplib::Result label(const std::string& id, const std::string& query_id, const std::string& cls) {
    return client_->Post("/sessions/" + id + "/labels", json{{"query_id", query_id}, {"class", cls}}.dump(),
                         "application/json");
  }

  std::string truth(const json& q) {
    const auto& data = *data_;
    const LabelQuery lq = q.get<LabelQuery>();
    return std::string(to_string(gt_answer(data.train[data.index_of(lq.image_id)].mask, lq).cls));
  }

  std::filesystem::path dir_;
  AnnotationService service_;
  int port_ = 0;
  std::unique_ptr<httplib::Client> client_;
  std::shared_ptr<const ExperimentData> data_ = test::tiny_data();
};

TEST_F(ServiceTest, QueriesCarryPreviewAndGeometry) {
  const std::string id = open_session();
  EXPECT_EQ(queries(id, 2).size(), 2u);
  const auto all = queries(id);
  ASSERT_EQ(all.size(), 6u);
  for (const auto& q : all) {
    EXPECT_EQ(q.at("status"), "pending");
    EXPECT_EQ(q.at("image").at("format"), "ppm");
    // "UDYK" is the base64 form of the "P6\n" magic.
    EXPECT_EQ(q.at("image").at("data").get<std::string>().substr(0, 4), "UDYK");
    EXPECT_FALSE(q.at("outline").empty());
    EXPECT_FALSE(q.contains("score"));
  }
  EXPECT_EQ(client_->Get("/sessions/" + id + "/queries?limit=-1")->status, 400);
}

TEST_F(ServiceTest, LabelErrorsMapToStatusCodes) {
  const std::string id = open_session();
  const auto q = queries(id, 1).at(0);
  auto res = label(id, q.at("query_id"), "salient");
  ASSERT_EQ(res->status, 200);
  EXPECT_EQ(json::parse(res->body).at("remaining"), 5);
  EXPECT_EQ(label(id, q.at("query_id"), "background")->status, 409);
  EXPECT_EQ(label(id, "r9_nope_0", "salient")->status, 404);
  EXPECT_EQ(label(id, queries(id, 1).at(0).at("query_id"), "purple")->status, 400);
  EXPECT_EQ(client_->Post("/sessions/" + id + "/labels", "{", "application/json")->status, 400);
  EXPECT_EQ(client_->Get("/sessions/s999/status")->status, 404);
  EXPECT_EQ(label("s999", q.at("query_id"), "salient")->status, 404);
  // Answered queries are no longer served.
  EXPECT_EQ(queries(id).size(), 5u);
}

TEST_F(ServiceTest, SecondSessionOnTheSameExperimentConflicts) {
  open_session();
  auto res = client_->Post("/sessions", json{{"experiment", dir_.string()}}.dump(), "application/json");
  EXPECT_EQ(res->status, 409);
  EXPECT_EQ(json::parse(res->body).at("error"), "conflict");
  auto missing = client_->Post("/sessions", json{{"experiment", (dir_ / "nowhere").string()}}.dump(),
                               "application/json");
  EXPECT_EQ(missing->status, 400);
}

TEST_F(ServiceTest, AnswersAreLoggedBeforeTheAck) {
  const std::string id = open_session();
  std::size_t expected = 0;
  for (const auto& q : queries(id, 3)) {
    ASSERT_EQ(label(id, q.at("query_id"), truth(q))->status, 200);
    const auto log = read_jsonl(dir_ / "answers.jsonl");
    ASSERT_EQ(log.size(), ++expected);
    EXPECT_EQ(log.back().at("query_id"), q.at("query_id"));
    EXPECT_EQ(log.back().at("source"), "human");
  }
}

TEST_F(ServiceTest, BatchSubmissionAcksEachLine) {
  const std::string id = open_session();
  const auto qs = queries(id);
  std::string body;
  for (const auto& q : qs) body += json{{"query_id", q.at("query_id")}, {"class", truth(q)}}.dump() + "\n";
  body += json{{"query_id", qs[0].at("query_id")}, {"class", "salient"}}.dump() + "\n";
  auto res = client_->Post("/sessions/" + id + "/labels", body, "application/x-ndjson");
  ASSERT_EQ(res->status, 200);
  const auto acks = ndjson(res->body);
  ASSERT_EQ(acks.size(), qs.size() + 1);
  EXPECT_EQ(acks[0].at("status"), 200);
  EXPECT_EQ(acks[qs.size() - 1].at("remaining"), 0);
  EXPECT_EQ(acks.back().at("status"), 409);
  service_.wait_idle(id);
  const json st = json::parse(client_->Get("/sessions/" + id + "/status")->body);
  EXPECT_EQ(st.at("round"), 1);
  EXPECT_EQ(st.at("budget_spent"), 2);
  EXPECT_EQ(st.at("pending"), 6);
  EXPECT_EQ(st.at("metric_history").size(), 1u);
}

// A full run answered over HTTP with the true labels ends in the same state
// as the simulated oracle run.
TEST_F(ServiceTest, HumanPathMatchesOracleRun) {
  const std::string id = open_session();
  for (int guard = 0; guard < 10; ++guard) {
    const json st = json::parse(client_->Get("/sessions/" + id + "/status")->body);
    ASSERT_EQ(st.at("error"), "");
    if (st.at("finished")) break;
    for (const auto& q : queries(id)) ASSERT_EQ(label(id, q.at("query_id"), truth(q))->status, 200);
    service_.wait_idle(id);
  }
  const ExperimentState served = load_state(dir_ / "state.json");
  EXPECT_TRUE(served.finished);
  const ExperimentState oracle = Engine(data_).run(test::tiny_config(), StrategyKind::atal, 1);
  EXPECT_EQ(served, oracle);
  for (const auto& a : read_jsonl(dir_ / "answers.jsonl")) EXPECT_EQ(a.at("source"), "human");
  EXPECT_FALSE(std::filesystem::exists(dir_ / "divergence.tsv"));
}

TEST_F(ServiceTest, ReopenedSessionResumesWhereItStopped) {
  std::string id = open_session();
  const auto qs = queries(id);
  for (std::size_t i = 0; i < 4; ++i) label(id, qs[i].at("query_id"), truth(qs[i]));
  service_.close_session(id);
  id = open_session();
  const auto rest = queries(id);
  ASSERT_EQ(rest.size(), 2u);
  EXPECT_EQ(rest[0].at("query_id"), qs[4].at("query_id"));
}

TEST(Preview, IsAnUpscaledPpm) {
  const auto data = test::tiny_data();
  LabelQuery q;
  q.image_id = data->train[0].id;
  q.row = 3;
  q.col = 5;
  q.superpixel_id = data->partitions[0].at(3, 5);
  const std::string bytes = render_query_preview(data->train[0].image, data->partitions[0], q, 4);
  const std::string head = "P6\n64 64\n255\n";
  ASSERT_EQ(bytes.substr(0, head.size()), head);
  EXPECT_EQ(bytes.size(), head.size() + 64u * 64u * 3u);
}

}  // namespace
}  // namespace atal
