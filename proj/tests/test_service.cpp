#include <gtest/gtest.h>

#include <thread>

#include "fixtures.hpp"
#include "fmx/service.hpp"

using namespace fmx;

namespace {

class ServiceTest : public ::testing::Test {
protected:
    void SetUp() override {
        ServiceConfig config;
        config.data_dir = FMX_FIXTURE_DIR;
        config.max_project_rows = 50;
        service_ = std::make_unique<Service>(config);
        service_->install(server_);
        port_ = server_.bind_to_any_port("127.0.0.1");
        ASSERT_GT(port_, 0);
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
        client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    }

    void TearDown() override {
        server_.stop();
        thread_.join();
    }

    static json body(const httplib::Result& r) { return json::parse(r->body); }

    httplib::Result post(const std::string& path, const json& j = json::object()) {
        return client_->Post(path, j.dump(), "application/json");
    }

    std::string open_heart() {
        auto r = post("/sessions", {{"data_path", "heart.data"}, {"names_path", "heart.names"}});
        EXPECT_EQ(r->status, 201);
        return body(r).at("id");
    }

    std::string url(const std::string& id, const std::string& rest) { return "/sessions/" + id + rest; }

    httplib::Server server_;
    std::unique_ptr<Service> service_;
    std::unique_ptr<httplib::Client> client_;
    std::thread thread_;
    int port_ = 0;
};

}  // namespace

TEST_F(ServiceTest, CreateFromPathsInlineAndMultipart) {
    auto r = post("/sessions", {{"data_path", "heart.data"}, {"names_path", "heart.names"}});
    ASSERT_EQ(r->status, 201);
    EXPECT_EQ(body(r)["rows"], 23);
    EXPECT_TRUE(body(r)["row_errors"].empty());
    EXPECT_EQ(r->get_header_value("Access-Control-Allow-Origin"), "*");

    r = post("/sessions", {{"data", fixture("animals.data") + "bad,row\n"}, {"names", fixture("animals.names")}});
    ASSERT_EQ(r->status, 201);
    EXPECT_EQ(body(r)["rows"], 7);
    EXPECT_EQ(body(r)["row_errors"].size(), 1u);
    EXPECT_EQ(body(r)["row_errors"][0]["line"], 8);

    httplib::MultipartFormDataItems items{{"data", fixture("heart.data"), "heart.data", "text/plain"},
                                          {"names", fixture("heart.names"), "heart.names", "text/xml"}};
    r = client_->Post("/sessions", items);
    ASSERT_EQ(r->status, 201);
    EXPECT_EQ(body(r)["rows"], 23);
    EXPECT_EQ(service_->store().size(), 3u);
}

TEST_F(ServiceTest, CreateRejections) {
    EXPECT_EQ(post("/sessions")->status, 400);
    EXPECT_EQ(client_->Post("/sessions", "{", "application/json")->status, 400);
    EXPECT_EQ(post("/sessions", {{"data_path", "../heart.data"}, {"names_path", "heart.names"}})->status, 400);
    EXPECT_EQ(post("/sessions", {{"data_path", "/etc/passwd"}, {"names_path", "heart.names"}})->status, 400);
    EXPECT_EQ(post("/sessions", {{"data_path", "none.data"}, {"names_path", "heart.names"}})->status, 404);
    EXPECT_EQ(post("/sessions", {{"data", "1\n"}, {"names", "<metadata>"}})->status, 422);
}

TEST_F(ServiceTest, UnknownSessionIs404) {
    EXPECT_EQ(client_->Get("/sessions/nope/metadata")->status, 404);
    EXPECT_EQ(client_->Delete("/sessions/nope")->status, 404);
    const auto id = open_heart();
    EXPECT_EQ(client_->Delete(url(id, ""))->status, 200);
    EXPECT_EQ(client_->Get(url(id, "/rows"))->status, 404);
}

TEST_F(ServiceTest, MetadataGetAndPatch) {
    const auto id = open_heart();
    auto r = client_->Get(url(id, "/metadata"));
    ASSERT_EQ(r->status, 200);
    EXPECT_EQ(body(r)["class"], "class");
    EXPECT_EQ(body(r)["attributes"].size(), 14u);

    json patch = {{"description", "patched"}, {"attributes", json::array({{{"name", "ca"}, {"skip", true}}})}};
    r = client_->Patch(url(id, "/metadata"), patch.dump(), "application/json");
    ASSERT_EQ(r->status, 200);
    EXPECT_EQ(body(r)["description"], "patched");
    EXPECT_EQ(body(r)["attributes"][11]["skip"], true);

    r = client_->Patch(url(id, "/metadata"), json{{"bogus", 1}}.dump(), "application/json");
    EXPECT_EQ(r->status, 422);
    json narrow = {{"attributes", json::array({{{"name", "sex"}, {"domain", json::array({"male"})}}})}};
    EXPECT_EQ(client_->Patch(url(id, "/metadata"), narrow.dump(), "application/json")->status, 422);
}

TEST_F(ServiceTest, RowsPagingPutDelete) {
    const auto id = open_heart();
    auto r = client_->Get(url(id, "/rows?offset=20&limit=5"));
    ASSERT_EQ(r->status, 200);
    EXPECT_EQ(body(r)["total"], 23);
    EXPECT_EQ(body(r)["rows"].size(), 3u);
    EXPECT_EQ(body(r)["rows"][0]["row_id"], 20);
    EXPECT_EQ(body(r)["rows"][0]["values"][0], 58);
    EXPECT_EQ(client_->Get(url(id, "/rows?limit=x"))->status, 400);

    json row = body(r)["rows"][0]["values"];
    row[0] = 59;
    r = client_->Put(url(id, "/rows/20"), json{{"values", row}}.dump(), "application/json");
    ASSERT_EQ(r->status, 200);
    EXPECT_EQ(body(r)["values"][0], 59);

    json keyed = {{"age", 30}, {"sex", "fem"}};
    r = client_->Put(url(id, "/rows/99"), keyed.dump(), "application/json");
    ASSERT_EQ(r->status, 200);
    EXPECT_EQ(body(r)["values"][2], nullptr);
    EXPECT_EQ(client_->Put(url(id, "/rows/1"), json{{"sex", "other"}}.dump(), "application/json")->status, 422);
    EXPECT_EQ(client_->Put(url(id, "/rows/1"), json{{"nope", 1}}.dump(), "application/json")->status, 422);
    EXPECT_EQ(client_->Put(url(id, "/rows/x"), "[]", "application/json")->status, 400);

    r = client_->Delete(url(id, "/rows/99"));
    ASSERT_EQ(r->status, 200);
    EXPECT_EQ(body(r)["rows"], 23);
    EXPECT_EQ(client_->Delete(url(id, "/rows/99"))->status, 404);
}

TEST_F(ServiceTest, ProjectSelectCrop) {
    const auto id = open_heart();
    EXPECT_EQ(client_->Get(url(id, "/projection"))->status, 409);
    EXPECT_EQ(client_->Get(url(id, "/hit?x=0&y=0&threshold=1"))->status, 409);

    auto r = post(url(id, "/project"), {{"seed", 42}, {"alpha", 0.25}});
    ASSERT_EQ(r->status, 200);
    auto p = body(r);
    EXPECT_EQ(p["k"], 2);
    EXPECT_EQ(p["row_ids"].size(), 23u);
    EXPECT_EQ(p["labels"][0], "sick");
    EXPECT_EQ(p["render"]["alpha"], 0.25);
    EXPECT_EQ(body(client_->Get(url(id, "/projection")))["coords"], p["coords"]);
    EXPECT_EQ(post(url(id, "/project"), {{"alpha", 2}})->status, 422);
    EXPECT_EQ(post(url(id, "/project"), {{"k", 0}})->status, 422);
    EXPECT_EQ(post(url(id, "/project"), {{"k", "two"}})->status, 400);

    const double x0 = p["coords"][0][0], y0 = p["coords"][0][1];
    r = client_->Get(url(id, "/hit?x=" + std::to_string(x0) + "&y=" + std::to_string(y0) + "&threshold=0.001"));
    EXPECT_EQ(body(r)["row_id"], 0);
    EXPECT_EQ(body(client_->Get(url(id, "/hit?x=1e9&y=1e9&threshold=1")))["row_id"], nullptr);
    EXPECT_EQ(client_->Get(url(id, "/hit?x=0&y=0"))->status, 400);

    r = client_->Get(url(id, "/viewport?width=640&height=480&margin=10"));
    ASSERT_EQ(r->status, 200);
    for (const auto& pt : body(r)["points"]) {
        EXPECT_GE(pt[0].get<double>(), 10 - 1e-9);
        EXPECT_LE(pt[0].get<double>(), 630 + 1e-9);
        EXPECT_GE(pt[1].get<double>(), 10 - 1e-9);
        EXPECT_LE(pt[1].get<double>(), 470 + 1e-9);
    }

    EXPECT_EQ(post(url(id, "/crop"))->status, 409);
    json big = {{"polygons", json::array({json::array({{-1e9, -1e9}, {1e9, -1e9}, {1e9, 1e9}, {-1e9, 1e9}})})}};
    r = post(url(id, "/selection"), big);
    ASSERT_EQ(r->status, 200);
    EXPECT_EQ(body(r)["count"], 23);
    json tiny = {{"polygons", json::array({json::array({{{"x", x0}, {"y", y0}}, {{"x", x0 + 1e-9}, {"y", y0}}, {{"x", x0}, {"y", y0 + 1e-9}}})})}};
    r = post(url(id, "/selection"), tiny);
    EXPECT_EQ(body(r)["selected"], json::array({0}));
    EXPECT_EQ(body(client_->Get(url(id, "/selection")))["count"], 1);
    EXPECT_EQ(post(url(id, "/selection"), {{"polygons", json::array()}, {"mode", "xor"}})->status, 400);
    EXPECT_EQ(post(url(id, "/selection"), {{"polygons", json::array({json::array({{0, 0}, {1, 1}})})}})->status, 422);

    r = post(url(id, "/delete-selected"));
    ASSERT_EQ(r->status, 200);
    EXPECT_EQ(body(r)["rows"], 22);
    EXPECT_EQ(body(r)["row_ids"][0], 1);
    EXPECT_EQ(client_->Get(url(id, "/projection"))->status, 409);
}

TEST_F(ServiceTest, RowCapRefusesProjection) {
    std::string data;
    for (int i = 0; i < 3; ++i) data += fixture("heart.data");
    auto r = post("/sessions", {{"data", data}, {"names", fixture("heart.names")}});
    const std::string id = body(r)["id"];
    r = post(url(id, "/project"));
    EXPECT_EQ(r->status, 409);
    EXPECT_NE(body(r)["error"].get<std::string>().find("limit 50"), std::string::npos);
}

TEST_F(ServiceTest, ObjectStatsImputeExport) {
    auto r = post("/sessions", {{"data", fixture("animals.data")}, {"names", fixture("animals.names")}});
    const std::string id = body(r)["id"];
    r = client_->Get(url(id, "/object/2"));
    ASSERT_EQ(r->status, 200);
    const auto pairs = body(r)["pairs"];
    EXPECT_EQ(pairs.size(), 5u);
    EXPECT_EQ(pairs[0]["attribute"], "Cover");
    EXPECT_EQ(pairs[2]["value"], nullptr);
    EXPECT_EQ(client_->Get(url(id, "/object/77"))->status, 404);

    r = client_->Get(url(id, "/stats"));
    ASSERT_EQ(r->status, 200);
    EXPECT_EQ(body(r)["clusters"], nullptr);
    EXPECT_TRUE(body(r).contains("warning"));
    EXPECT_EQ(post(url(id, "/project"))->status, 422);

    r = post(url(id, "/impute"), {{"strategy", "mean"}});
    ASSERT_EQ(r->status, 200);
    EXPECT_EQ(body(r)["filled"].size(), 3u);
    EXPECT_EQ(post(url(id, "/impute"), {{"strategy", "median"}})->status, 422);

    ASSERT_EQ(post(url(id, "/project"))->status, 200);
    r = client_->Get(url(id, "/stats"));
    const auto stats = body(r);
    ASSERT_FALSE(stats["clusters"].is_null());
    EXPECT_EQ(stats["clusters"]["unlabeled"], 0);  // mode imputation fills the class too
    EXPECT_FALSE(stats["clusters"]["projected"].is_null());

    r = post(url(id, "/export"), {{"format", "html"}});
    ASSERT_EQ(r->status, 200);
    EXPECT_EQ(body(r)["files"].size(), 1u);
    r = post(url(id, "/export"));
    EXPECT_EQ(body(r)["files"].size(), 2u);
    EXPECT_EQ(post(url(id, "/export"), {{"format", "pdf"}})->status, 422);
}

TEST_F(ServiceTest, PreflightHasCorsHeaders) {
    auto r = client_->Options("/sessions");
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 204);
    EXPECT_NE(r->get_header_value("Access-Control-Allow-Methods").find("PATCH"), std::string::npos);
}
