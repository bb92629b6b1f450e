#include <gtest/gtest.h>

#include <httplib.h>

#include <atomic>
#include <json.hpp>
#include <random>
#include <thread>

#include "sledge/image_io.hpp"
#include "sledge/service.hpp"
#include "support.hpp"

namespace sledge::service {
namespace {

using sledge::testing::code_of;
using nlohmann::json;

const FontRegistry& fonts() { return FontRegistry::shared_default(); }

class SwitchableGenerator final : public Generator {
 public:
  GeneratorResult generate(const GeneratorRequest& r) override {
    if (down) throw Error(ErrorCode::backend_transport, "generator unreachable");
    return MockGenerator().generate(r);
  }
  std::atomic<bool> down{false};
};

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override { boot(); }
  void TearDown() override { service.reset(); }

  void boot() {
    service.reset();
    ServiceConfig cfg;
    cfg.store_dir = tmp.path() / "store";
    cfg.port = 0;
    cfg.cors_origin = "http://studio.local";
    service = std::make_unique<DesignService>(cfg, Backends{generator, std::make_shared<NullRefiner>(), nullptr}, fonts());
    port = service->start();
    client = std::make_unique<httplib::Client>("127.0.0.1", port);
  }

  std::string create(int w = 96, int h = 64) {
    auto r = client->Post("/sessions", json{{"width", w}, {"height", h}, {"theme", "Jazz"}}.dump(), "application/json");
    EXPECT_EQ(r->status, 201);
    return json::parse(r->body)["id"];
  }

  httplib::Result step(const std::string& id, const std::string& instruction, std::uint64_t seed = 0) {
    return client->Post("/sessions/" + id + "/steps", json{{"instruction", instruction}, {"seed", seed}}.dump(),
                        "application/json");
  }

  Canvas canvas(const std::string& id, const std::string& query = "") {
    auto r = client->Get("/sessions/" + id + "/canvas" + query);
    EXPECT_EQ(r->status, 200);
    EXPECT_EQ(r->get_header_value("Content-Type"), "image/png");
    return decode_png(r->body);
  }

  static std::string code(const httplib::Result& r) { return json::parse(r->body).value("code", ""); }

  testing::TempDir tmp;
  std::shared_ptr<SwitchableGenerator> generator = std::make_shared<SwitchableGenerator>();
  std::unique_ptr<DesignService> service;
  std::unique_ptr<httplib::Client> client;
  int port = 0;
};

TEST_F(ServiceTest, HealthAndCors) {
  auto r = client->Get("/healthz");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  EXPECT_EQ(r->get_header_value("Access-Control-Allow-Origin"), "http://studio.local");
  auto pre = client->Options("/sessions");
  EXPECT_EQ(pre->status, 204);
  EXPECT_NE(pre->get_header_value("Access-Control-Allow-Methods").find("PATCH"), std::string::npos);
}

TEST_F(ServiceTest, CreateSession) {
  auto r = client->Post("/sessions", R"({"width":32,"height":16,"background":"#102030"})", "application/json");
  ASSERT_EQ(r->status, 201);
  const auto j = json::parse(r->body);
  EXPECT_EQ(j["cursor"], 0);
  EXPECT_EQ(j["step_count"], 0);
  EXPECT_EQ(j["background"], "#102030FF");
  const std::string id = j["id"];
  EXPECT_EQ(canvas(id), new_canvas(32, 16, {0x10, 0x20, 0x30, 255}));
  EXPECT_EQ(json::parse(client->Get("/sessions/" + id)->body), j);

  const auto defaults = json::parse(client->Post("/sessions", "", "application/json")->body);
  EXPECT_EQ(defaults["canvas_width"], 1024);

  for (const char* bad : {R"({"width":0})", R"({"width":"wide"})", R"({"colour":"#fff"})", R"({"background":"teal"})",
                          "not json", "[1,2]"}) {
    auto e = client->Post("/sessions", bad, "application/json");
    EXPECT_EQ(e->status, 422) << bad;
    EXPECT_EQ(e->get_header_value("Content-Type"), "application/problem+json") << bad;
  }
  EXPECT_EQ(client->Get("/sessions/nope")->status, 404);
  EXPECT_EQ(code(client->Get("/sessions/nope")), "not_found");
}

TEST_F(ServiceTest, StepsRenderAndMatchTheDocument) {
  const std::string id = create();
  auto r = step(id, "Create a background with a warm gradient");
  ASSERT_EQ(r->status, 200) << r->body;
  auto rec = json::parse(r->body);
  EXPECT_EQ(rec["index"], 0);
  EXPECT_TRUE(rec["has_layer"]);
  EXPECT_EQ(rec["mask_pixels"], 96 * 64);
  r = step(id, "add the text \"SALE\" at the top", 3);
  rec = json::parse(r->body);
  EXPECT_EQ(rec["elements"][0]["kind"], "text");
  EXPECT_FALSE(rec["has_layer"]);

  const auto s = service->store().get(id);
  EXPECT_EQ(s->cursor(), 2u);
  EXPECT_EQ(canvas(id), flatten(s->document(), 2, fonts()));
  EXPECT_EQ(canvas(id, "?step=0"), new_canvas(96, 64, kOpaqueWhite));
  EXPECT_EQ(canvas(id, "?step=1"), flatten(s->document(), 1, fonts()));
  EXPECT_EQ(client->Get("/sessions/" + id + "/canvas?step=3")->status, 422);

  auto doc = client->Get("/sessions/" + id + "/document");
  EXPECT_EQ(doc->status, 200);
  EXPECT_EQ(doc->get_header_value("X-Sledge-Cursor"), "2");
  EXPECT_EQ(json::parse(doc->body)["steps"].size(), 2u);

  auto layer = client->Get("/sessions/" + id + "/layers/0");
  ASSERT_EQ(layer->status, 200);
  EXPECT_EQ(decode_png(layer->body), *s->document().steps[0].image_layer);
  EXPECT_EQ(client->Get("/sessions/" + id + "/layers/1")->status, 404);
  EXPECT_EQ(client->Get("/sessions/" + id + "/layers/9")->status, 404);
}

TEST_F(ServiceTest, InvalidStepsAreRejectedWithoutSideEffects) {
  const std::string id = create();
  ASSERT_EQ(step(id, "draw a circle")->status, 200);
  const Canvas before = canvas(id);

  auto r = step(id, "   ");
  EXPECT_EQ(r->status, 422);
  EXPECT_EQ(code(r), "validation");
  EXPECT_EQ(client->Post("/sessions/" + id + "/steps", R"({"instruction":"x","speed":1})", "application/json")->status,
            422);
  EXPECT_EQ(client->Post("/sessions/" + id + "/steps", R"({"seed":1})", "application/json")->status, 422);
  EXPECT_EQ(
      client->Post("/sessions/" + id + "/steps", R"({"instruction":"x","dilation_radius":-2})", "application/json")->status,
      422);
  EXPECT_EQ(step("missing", "draw a circle")->status, 404);

  generator->down = true;
  r = step(id, "draw a square");
  EXPECT_EQ(r->status, 502);
  EXPECT_EQ(code(r), "backend_transport");
  generator->down = false;

  EXPECT_EQ(service->store().get(id)->document().steps.size(), 1u);
  EXPECT_EQ(canvas(id), before);
}

TEST_F(ServiceTest, UndoRedoAndBoundaries) {
  const std::string id = create();
  auto undo = [&] { return client->Post("/sessions/" + id + "/undo", "", "application/json"); };
  auto redo = [&] { return client->Post("/sessions/" + id + "/redo", "", "application/json"); };
  EXPECT_EQ(undo()->status, 409);
  EXPECT_EQ(code(undo()), "range");
  step(id, "draw a circle");
  step(id, "draw a square");
  const Canvas two = canvas(id);
  EXPECT_EQ(redo()->status, 409);
  auto r = undo();
  ASSERT_EQ(r->status, 200);
  EXPECT_EQ(json::parse(r->body)["cursor"], 1);
  EXPECT_EQ(canvas(id), canvas(id, "?step=1"));
  ASSERT_EQ(redo()->status, 200);
  EXPECT_EQ(canvas(id), two);
  ASSERT_EQ(undo()->status, 200);
  ASSERT_EQ(undo()->status, 200);
  EXPECT_EQ(undo()->status, 409);
  EXPECT_EQ(canvas(id), new_canvas(96, 64, kOpaqueWhite));
}

TEST_F(ServiceTest, MultipartAssetStep) {
  const std::string id = create(128, 128);
  std::mt19937_64 rng(4);
  const Canvas logo = testing::random_canvas(rng, 16, 16, true);
  httplib::MultipartFormDataItems items = {
      {"request", json{{"instruction", "place the logo top-right"}}.dump(), "", "application/json"},
      {"asset", encode_png(logo), "logo.png", "image/png"},
  };
  auto r = client->Post("/sessions/" + id + "/steps", items);
  ASSERT_EQ(r->status, 200) << r->body;
  const auto rec = json::parse(r->body);
  EXPECT_EQ(rec["asset_ref"], "sha256:" + digest(logo));
  const auto& b = rec["elements"][0]["bbox"];
  EXPECT_GE(b[0].get<int>(), 64);
  EXPECT_LT(b[3].get<int>(), 64);
  const Canvas c = canvas(id);
  EXPECT_EQ(c.at(b[0].get<int>(), b[1].get<int>()), resize_nearest(logo, 32, 32).at(0, 0));

  httplib::MultipartFormDataItems broken = {
      {"request", json{{"instruction", "place the logo"}}.dump(), "", "application/json"},
      {"asset", "not a png", "logo.png", "image/png"},
  };
  EXPECT_EQ(client->Post("/sessions/" + id + "/steps", broken)->status, 422);
  httplib::MultipartFormDataItems no_request = {{"asset", encode_png(logo), "logo.png", "image/png"}};
  EXPECT_EQ(client->Post("/sessions/" + id + "/steps", no_request)->status, 422);
}

TEST_F(ServiceTest, PatchTextElement) {
  const std::string id = create(200, 120);
  step(id, "draw a circle");
  step(id, "add the text \"SALE\" in the middle");
  const Canvas before = canvas(id);
  auto r = client->Patch("/sessions/" + id + "/steps/1/elements/0", R"({"color":"#ff0000","content":"SOLD"})",
                         "application/json");
  ASSERT_EQ(r->status, 200) << r->body;
  const auto rec = json::parse(r->body);
  EXPECT_EQ(rec["elements"][0]["content"], "SOLD");
  EXPECT_EQ(rec["elements"][0]["color"], "#FF0000FF");
  const Canvas after = canvas(id);
  EXPECT_NE(after, before);
  const auto s = service->store().get(id);
  EXPECT_EQ(after, flatten(s->document(), 2, fonts()));
  const BBox box = s->document().steps[1].elements[0].bbox;
  for (int y = 0; y < 120; ++y)
    for (int x = 0; x < 200; ++x)
      if (!box.contains(x, y)) {
        ASSERT_EQ(after.at(x, y), before.at(x, y));
      }

  auto patch = [&](const std::string& path, const std::string& body) {
    return client->Patch("/sessions/" + id + path, body, "application/json");
  };
  EXPECT_EQ(patch("/steps/0/elements/0", R"({"color":"#000000"})")->status, 422);
  EXPECT_EQ(code(patch("/steps/0/elements/0", R"({"color":"#000000"})")), "wrong_kind");
  EXPECT_EQ(patch("/steps/5/elements/0", R"({"color":"#000000"})")->status, 422);
  EXPECT_EQ(patch("/steps/1/elements/0", R"({"font_size":2})")->status, 422);
  EXPECT_EQ(patch("/steps/1/elements/0", R"({"weight":"bold"})")->status, 422);
  EXPECT_EQ(patch("/steps/1/elements/0", R"({"bbox":[500,500,600,600]})")->status, 422);
  EXPECT_EQ(client->Patch("/sessions/nope/steps/0/elements/0", "{}", "application/json")->status, 404);
  EXPECT_EQ(canvas(id), after);
}

TEST_F(ServiceTest, SessionsSurviveRestart) {
  const std::string id = create();
  step(id, "draw a circle");
  step(id, "draw a square");
  client->Post("/sessions/" + id + "/undo", "", "application/json");
  const Canvas c = canvas(id);
  boot();
  const auto j = json::parse(client->Get("/sessions/" + id)->body);
  EXPECT_EQ(j["cursor"], 1);
  EXPECT_EQ(j["step_count"], 2);
  EXPECT_EQ(canvas(id), c);
}

TEST_F(ServiceTest, ConcurrentStepsSerialize) {
  const std::string id = create(48, 48);
  std::vector<std::thread> threads;
  std::atomic<int> ok{0};
  for (int t = 0; t < 6; ++t) {
    threads.emplace_back([&, t] {
      httplib::Client c("127.0.0.1", port);
      auto r = c.Post("/sessions/" + id + "/steps", json{{"instruction", "draw a circle"}, {"seed", t}}.dump(),
                      "application/json");
      if (r && r->status == 200) ++ok;
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(ok.load(), 6);
  const auto s = service->store().get(id);
  EXPECT_EQ(s->document().steps.size(), 6u);
  EXPECT_EQ(s->cursor(), 6u);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(s->document().steps[i].index, i);
}

// ---------------------------------------------------------------------------

TEST(SessionStore, EvictsAndReloadsFromDisk) {
  testing::TempDir tmp;
  SessionStore store(tmp.path(), 2);
  std::vector<std::string> ids;
  for (int i = 0; i < 4; ++i) ids.push_back(store.create(make_document(8 + i, 8, kOpaqueWhite))->id());
  EXPECT_LE(store.resident(), 2u);
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(store.get(ids[i])->document().canvas_width, 8 + i);
    EXPECT_TRUE(std::filesystem::exists(store.bundle_dir(ids[i])));
  }
  EXPECT_EQ(code_of([&] { store.get("unknown"); }), ErrorCode::not_found);
}

TEST(SessionStore, FailedMutationPublishesNothing) {
  testing::TempDir tmp;
  SessionStore store(tmp.path());
  const auto s = store.create(make_document(16, 16, kOpaqueWhite));
  StepRecord rec;
  rec.instruction = "bad";
  rec.elements.push_back(ElementMetadata::make_image({0, 0, 4, 4}));
  EXPECT_EQ(code_of([&] { store.mutate(s->id(), [&](Session& x) { x.push_step(rec); }); }), ErrorCode::validation);
  EXPECT_EQ(code_of([&] {
              store.mutate(s->id(), [&](Session& x) {
                StepRecord t;
                t.instruction = "text";
                t.elements.push_back(ElementMetadata::make_text({0, 0, 16, 16}, {"Hi", "sans", 8, kOpaqueBlack}));
                x.push_step(t);
                throw Error(ErrorCode::io, "disk full");
              });
            }),
            ErrorCode::io);
  EXPECT_EQ(store.get(s->id())->document().steps.size(), 0u);
  SessionStore reopened(tmp.path());
  EXPECT_EQ(reopened.get(s->id())->document().steps.size(), 0u);
}

TEST(SessionFiles, RoundTripKeepsCursor) {
  testing::TempDir tmp;
  std::mt19937_64 rng(8);
  Session s("abc", testing::random_document(rng, 20, 14, 3), 2);
  save_session(s, tmp.path() / "abc.sledge");
  const Session back = load_session(tmp.path() / "abc.sledge", "abc");
  EXPECT_EQ(back.document(), s.document());
  EXPECT_EQ(back.cursor(), 2u);
  EXPECT_EQ(back.id(), "abc");
}

TEST(HttpStatus, MapsErrorCodes) {
  EXPECT_EQ(http_status(ErrorCode::validation), 422);
  EXPECT_EQ(http_status(ErrorCode::not_found), 404);
  EXPECT_EQ(http_status(ErrorCode::backend_transport), 502);
  EXPECT_EQ(http_status(ErrorCode::protocol), 502);
  EXPECT_EQ(http_status(ErrorCode::corrupt_document), 500);
  const auto j = json::parse(problem_json(ErrorCode::range, "nothing to undo", 409));
  EXPECT_EQ(j["status"], 409);
  EXPECT_EQ(j["code"], "range");
  EXPECT_EQ(j["detail"], "nothing to undo");
}

}  // namespace
}  // namespace sledge::service
