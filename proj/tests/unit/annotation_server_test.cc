#include <gtest/gtest.h>

#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "oracles.h"
#include "prodsearch/annotation.h"

namespace prodsearch {
namespace {

using nlohmann::json;

class ServerTest : public ::testing::Test {
 protected:
  void SetUp() override {
    std::vector<AnnotationItem> items;
    for (int i = 0; i < 3; ++i) {
      items.push_back({"q" + std::to_string(i), "sonix laptop " + std::to_string(i),
                       {{"https://sonix.com/p", "pro laptop", 40.0, 1}}, i});
    }
    service_ = std::make_unique<AnnotationService>(items, std::vector<std::string>{"a1", "a2"},
                                                   dir_.str("labels.jsonl"));
    server_ = std::make_unique<AnnotationServer>(*service_);
    port_ = server_->bind("127.0.0.1", 0);
    thread_ = std::thread([this] { server_->listen(); });
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    for (int i = 0; i < 200 && !client_->Get("/api/progress"); ++i) {
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
  }

  void TearDown() override {
    server_->stop();
    thread_.join();
  }

  httplib::Result post_label(const std::string& body) {
    return client_->Post("/api/labels", body, "application/json");
  }

  oracle::TempDir dir_{"server"};
  std::unique_ptr<AnnotationService> service_;
  std::unique_ptr<AnnotationServer> server_;
  std::unique_ptr<httplib::Client> client_;
  std::thread thread_;
  int port_ = 0;
};

TEST_F(ServerTest, LabelLoopThroughTheApi) {
  auto res = client_->Get("/api/items/next?annotator=a1");
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 200);
  auto item = json::parse(res->body)["item"];
  EXPECT_EQ(item["query_id"], "q0");
  EXPECT_EQ(item["status"], "pending");
  EXPECT_EQ(item["clicks"][0]["url"], "https://sonix.com/p");

  res = post_label(R"({"annotator":"a1","query_id":"q0","label":"Transactional"})");
  ASSERT_EQ(res->status, 200);
  EXPECT_EQ(json::parse(res->body)["status"], "partially_labeled");
  res = post_label(R"({"annotator":"a2","query_id":"q0","label":"Transactional"})");
  EXPECT_EQ(json::parse(res->body)["status"], "complete");

  res = client_->Get("/api/items/next?annotator=a1");
  EXPECT_EQ(json::parse(res->body)["item"]["query_id"], "q1");

  res = client_->Get("/api/items/q0");
  ASSERT_EQ(res->status, 200);
  const auto detail = json::parse(res->body);
  EXPECT_EQ(detail["labels"]["a2"], "Transactional");
  EXPECT_EQ(detail["status"], "complete");

  res = client_->Get("/api/progress");
  const auto progress = json::parse(res->body);
  EXPECT_EQ(progress["complete"], 1);
  EXPECT_EQ(progress["pending"], 2);
  EXPECT_EQ(progress["labeled_by"]["a1"], 1);

  res = client_->Get("/api/agreement");
  const auto agreement = json::parse(res->body);
  EXPECT_EQ(agreement["n_items"], 1);
  EXPECT_EQ(agreement["kappa"].get<double>(), *service_->agreement().kappa);
}

TEST_F(ServerTest, ExhaustedQueueReturnsNullItem) {
  for (const char* q : {"q0", "q1", "q2"}) {
    post_label(std::string(R"({"annotator":"a1","query_id":")") + q + R"(","label":"Skip"})");
  }
  const auto res = client_->Get("/api/items/next?annotator=a1");
  ASSERT_EQ(res->status, 200);
  EXPECT_TRUE(json::parse(res->body)["item"].is_null());
}

TEST_F(ServerTest, AgreementWithoutCompleteItemsIsNull) {
  const auto res = client_->Get("/api/agreement");
  EXPECT_TRUE(json::parse(res->body)["kappa"].is_null());
}

TEST_F(ServerTest, ErrorStatuses) {
  EXPECT_EQ(client_->Get("/api/items/next")->status, 400);
  EXPECT_EQ(client_->Get("/api/items/next?annotator=zed")->status, 404);
  EXPECT_EQ(client_->Get("/api/items/nope")->status, 404);
  EXPECT_EQ(post_label("{not json")->status, 400);
  EXPECT_EQ(post_label(R"({"annotator":"a1","query_id":"q0"})")->status, 400);
  EXPECT_EQ(post_label(R"({"annotator":"a1","query_id":"q0","label":"Bogus"})")->status, 400);
  EXPECT_EQ(post_label(R"({"annotator":"zed","query_id":"q0","label":"Skip"})")->status, 404);
  EXPECT_EQ(post_label(R"({"annotator":"a1","query_id":"nope","label":"Skip"})")->status, 404);
  const auto res = post_label(R"({"annotator":"a1","query_id":"q0","label":"Bogus"})");
  EXPECT_TRUE(json::parse(res->body).contains("error"));
  EXPECT_EQ(service_->status("q0"), ItemStatus::Pending);
}

TEST(ServerStorage, WriteFailureIs500AndNothingChanges) {
  oracle::TempDir dir("server_fail");
  AnnotationService svc({{"q0", "x", {}, 0}}, {"a1"}, dir.str("no/such/dir/labels.jsonl"));
  AnnotationServer server(svc);
  const int port = server.bind("127.0.0.1", 0);
  std::thread t([&] { server.listen(); });
  httplib::Client client("127.0.0.1", port);
  httplib::Result res;
  for (int i = 0; i < 200 && !(res = client.Post("/api/labels",
                                                 R"({"annotator":"a1","query_id":"q0","label":"Skip"})",
                                                 "application/json"));
       ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 500);
  EXPECT_EQ(svc.status("q0"), ItemStatus::Pending);
  server.stop();
  t.join();
}

}  // namespace
}  // namespace prodsearch
