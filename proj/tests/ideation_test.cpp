#include <gtest/gtest.h>

#include <filesystem>
#include <functional>
#include <mutex>
#include <random>

#include "sledge/ideation.hpp"
#include "sledge/image_io.hpp"
#include "support.hpp"

namespace sledge::ideation {
namespace {

namespace fs = std::filesystem;
using sledge::testing::code_of;

class LambdaModel final : public ModelClient {
 public:
  explicit LambdaModel(std::function<std::string(const ModelQuery&)> fn) : fn_(std::move(fn)) {}
  std::string complete(const ModelQuery& q) override {
    std::lock_guard lock(mutex_);
    queries.push_back(q);
    return fn_(q);
  }
  std::vector<ModelQuery> queries;

 private:
  std::mutex mutex_;
  std::function<std::string(const ModelQuery&)> fn_;
};

BundleElement image_el(BBox b, Rgba colour, std::optional<std::string> caption = {}) {
  std::vector<std::uint8_t> px;
  for (int i = 0; i < b.width() * b.height(); ++i) px.insert(px.end(), {colour.r, colour.g, colour.b, colour.a});
  return {Canvas(b.width(), b.height(), std::move(px)), b, ElementKind::image, std::nullopt, std::move(caption),
          std::nullopt};
}

BundleElement text_el(BBox b, std::string content) {
  BundleElement e = image_el(b, {0, 0, 0, 200});
  e.kind = ElementKind::text;
  e.text = TextAttributes{std::move(content), "serif", 18, kOpaqueBlack};
  return e;
}

// Composite built by painting the elements in index order.
LayeredBundle bundle_of(std::vector<BundleElement> els, int w = 64, int h = 48) {
  LayeredBundle b{"poster-1", {250, 245, 240, 255}, new_canvas(w, h, {250, 245, 240, 255}), std::move(els)};
  for (const auto& e : b.elements) b.composite = composite_at(b.composite, e.raster, e.bbox.x0, e.bbox.y0);
  return b;
}

LayeredBundle five_elements() {
  return bundle_of({image_el({0, 0, 64, 48}, {30, 30, 90, 255}, "backdrop"),
                    image_el({4, 4, 20, 20}, {200, 30, 30, 255}),
                    text_el({10, 30, 60, 44}, "Jazz"),
                    image_el({40, 2, 60, 22}, {20, 200, 20, 128}, "a green square"),
                    image_el({30, 10, 46, 26}, {240, 240, 0, 255})});
}

std::vector<std::string> default_instructions(const LayeredBundle& b) {
  std::vector<std::string> out;
  for (const auto& e : b.elements) out.push_back(default_instruction(e));
  return out;
}

// ---------------------------------------------------------------------------

TEST(HeuristicOrder, AreaDescendingThenTopLeftThenIndex) {
  const auto b = bundle_of({image_el({0, 0, 4, 4}, kOpaqueBlack), image_el({0, 0, 10, 10}, kOpaqueBlack),
                            image_el({5, 3, 11, 9}, kOpaqueBlack), image_el({2, 3, 8, 9}, kOpaqueBlack),
                            image_el({0, 20, 4, 24}, kOpaqueBlack), image_el({0, 0, 4, 4}, kOpaqueBlack)});
  EXPECT_EQ(heuristic_order(b), (std::vector<std::size_t>{1, 3, 2, 0, 5, 4}));
}

TEST(ParsePermutation, AcceptsOnlyPermutations) {
  EXPECT_EQ(parse_permutation("[2,0,1]", 3), (std::vector<std::size_t>{2, 0, 1}));
  EXPECT_EQ(parse_permutation(" [ 0 ] ", 1), (std::vector<std::size_t>{0}));
  for (const char* bad : {"[0,1]", "[0,1,1]", "[0,1,3]", "[-1,0,1]", "[0,1,2.5]", "0,1,2", "{\"order\":[0,1,2]}",
                          "[\"0\",1,2]", ""}) {
    EXPECT_FALSE(parse_permutation(bad, 3)) << bad;
  }
}

TEST(OrderElements, ModelPermutationIsUsedVerbatim) {
  const auto b = bundle_of({image_el({0, 0, 10, 10}, kOpaqueBlack), image_el({0, 0, 20, 20}, kOpaqueBlack),
                            image_el({0, 0, 5, 5}, kOpaqueBlack)});
  LambdaModel m([](const ModelQuery&) { return "[2,0,1]"; });
  const auto r = order_elements(b, &m);
  EXPECT_TRUE(r.from_model);
  EXPECT_EQ(r.order, (std::vector<std::size_t>{2, 0, 1}));
  ASSERT_EQ(m.queries.size(), 1u);
  EXPECT_EQ(m.queries[0].template_id, "element-order-v1");
  ASSERT_EQ(m.queries[0].attachments.size(), 4u);
  EXPECT_EQ(m.queries[0].attachments.back(), b.composite);
  EXPECT_EQ(m.queries[0].substitutions.at("<count>"), "3");
  EXPECT_EQ(m.queries[0].prompt.find("<count>"), std::string::npos);
}

TEST(OrderElements, RetriesOnceThenFallsBackToHeuristic) {
  const auto b = bundle_of({image_el({0, 0, 10, 10}, kOpaqueBlack), image_el({0, 0, 20, 20}, kOpaqueBlack)});
  int calls = 0;
  LambdaModel second_try([&](const ModelQuery&) { return ++calls == 1 ? "first the big one" : "[1,0]"; });
  auto r = order_elements(b, &second_try);
  EXPECT_TRUE(r.from_model);
  EXPECT_EQ(r.order, (std::vector<std::size_t>{1, 0}));

  LambdaModel hopeless([](const ModelQuery&) { return "[0,0]"; });
  r = order_elements(b, &hopeless);
  EXPECT_FALSE(r.from_model);
  EXPECT_EQ(r.order, heuristic_order(b));
  EXPECT_EQ(hopeless.queries.size(), 2u);
  ASSERT_EQ(r.warnings.size(), 1u);

  r = order_elements(b, nullptr);
  EXPECT_FALSE(r.from_model);
  EXPECT_EQ(r.order, (std::vector<std::size_t>{1, 0}));
}

// ---------------------------------------------------------------------------

TEST(BuildTriplets, SingleElementGoesFromBackgroundToComposite) {
  const auto b = bundle_of({image_el({10, 10, 30, 20}, {1, 2, 3, 255}, "a bar")});
  const auto t = build_triplets(b, {0}, {"Add a bar."});
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0].before, new_canvas(64, 48, b.background));
  EXPECT_EQ(t[0].after, b.composite);
  EXPECT_EQ(t[0].instruction, "Add a bar.");
  ASSERT_EQ(t[0].metadata.size(), 1u);
  EXPECT_EQ(t[0].metadata[0].caption, "a bar");
}

TEST(BuildTriplets, ChainAndConfineEachDiffToItsElement) {
  const auto b = five_elements();
  const auto order = heuristic_order(b);
  const auto ins = default_instructions(b);
  const auto t = build_triplets(b, order, ins);
  ASSERT_EQ(t.size(), 5u);
  EXPECT_EQ(t.front().before, new_canvas(64, 48, b.background));
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto& el = b.elements[order[i]];
    EXPECT_EQ(t[i].instruction, ins[order[i]]);
    EXPECT_EQ(t[i].metadata[0], el.metadata());
    if (i + 1 < t.size()) {
      EXPECT_EQ(t[i].after, t[i + 1].before);
    }
    for (int y = 0; y < 48; ++y)
      for (int x = 0; x < 64; ++x) {
        if (el.bbox.contains(x, y)) {
          ASSERT_EQ(t[i].after.at(x, y),
                    testing::oracle_over(t[i].before.at(x, y), el.raster.at(x - el.bbox.x0, y - el.bbox.y0)));
        } else {
          ASSERT_EQ(t[i].after.at(x, y), t[i].before.at(x, y));
        }
      }
  }
}

TEST(BuildTriplets, IndexOrderReproducesTheComposite) {
  const auto b = five_elements();
  const auto t = build_triplets(b, {0, 1, 2, 3, 4}, default_instructions(b));
  EXPECT_EQ(t.back().after, b.composite);
}

TEST(BuildTriplets, RejectsMismatchedInputs) {
  const auto b = five_elements();
  const auto ins = default_instructions(b);
  EXPECT_EQ(code_of([&] { build_triplets(b, {0, 1, 2, 3, 4}, {"one"}); }), ErrorCode::arity);
  EXPECT_EQ(code_of([&] { build_triplets(b, {0, 1, 2, 3}, ins); }), ErrorCode::validation);
  EXPECT_EQ(code_of([&] { build_triplets(b, {0, 1, 2, 3, 3}, ins); }), ErrorCode::validation);
  EXPECT_EQ(code_of([&] { build_triplets(b, {0, 1, 2, 3, 9}, ins); }), ErrorCode::validation);
}

TEST(DefaultInstruction, PrefersSourceThenMetadata) {
  auto e = text_el({0, 0, 4, 4}, "Hello");
  EXPECT_EQ(default_instruction(e), "Add the text \"Hello\" in a serif font.");
  e.instruction = "  Write hello.  ";
  EXPECT_EQ(default_instruction(e), "Write hello.");
  EXPECT_EQ(default_instruction(image_el({0, 0, 2, 2}, kOpaqueBlack, "a red sun")), "Add a red sun.");
  EXPECT_EQ(default_instruction(image_el({0, 0, 2, 2}, kOpaqueBlack)), "Add an image element.");
}

TEST(LayeredBundle, SaveLoadRoundTrip) {
  testing::TempDir tmp;
  auto b = five_elements();
  b.elements[1].instruction = "Put a red square in the corner.";
  save_layered_bundle(b, tmp.path() / "b");
  const auto back = load_layered_bundle(tmp.path() / "b");
  EXPECT_EQ(back.source_id, b.source_id);
  EXPECT_EQ(back.background, b.background);
  EXPECT_EQ(back.composite, b.composite);
  ASSERT_EQ(back.elements.size(), b.elements.size());
  for (std::size_t i = 0; i < b.elements.size(); ++i) {
    EXPECT_EQ(back.elements[i].raster, b.elements[i].raster);
    EXPECT_EQ(back.elements[i].metadata(), b.elements[i].metadata());
    EXPECT_EQ(back.elements[i].instruction, b.elements[i].instruction);
  }
}

TEST(LayeredBundle, CorruptInputs) {
  testing::TempDir tmp;
  EXPECT_EQ(code_of([&] { load_layered_bundle(tmp.path() / "missing"); }), ErrorCode::not_found);

  const fs::path dir = tmp.path() / "b";
  save_layered_bundle(five_elements(), dir);
  const std::string good = read_file(dir / "bundle.json");
  auto expect_corrupt = [&](const std::string& from, const std::string& to) {
    std::string s = good;
    const auto at = s.find(from);
    ASSERT_NE(at, std::string::npos) << from;
    s.replace(at, from.size(), to);
    write_file(dir / "bundle.json", s);
    EXPECT_EQ(code_of([&] { load_layered_bundle(dir); }), ErrorCode::corrupt_document) << to;
  };
  expect_corrupt("\"width\": 64", "\"width\": 65");
  expect_corrupt("\"e1.png\"", "\"e0.png\"");
  expect_corrupt("\"raster\": \"e2.png\"", "\"raster\": 2");
  expect_corrupt("\"kind\": \"image\"", "\"kind\": \"video\"");
  expect_corrupt("{", "[");
  write_file(dir / "bundle.json", good);
  EXPECT_NO_THROW(load_layered_bundle(dir));
}

TEST(WriteTriplets, LaysOutNumberedDirectories) {
  testing::TempDir tmp;
  const auto b = five_elements();
  const auto t = build_triplets(b, heuristic_order(b), default_instructions(b));
  EXPECT_EQ(write_triplets(t, tmp.path(), 7), 12u);
  for (std::size_t i = 0; i < 5; ++i) {
    char name[16];
    std::snprintf(name, sizeof name, "%06zu", 7 + i);
    const fs::path d = tmp.path() / name;
    EXPECT_EQ(decode_png(read_file(d / "before.png")), t[i].before);
    EXPECT_EQ(decode_png(read_file(d / "after.png")), t[i].after);
    EXPECT_EQ(read_file(d / "instruction.txt"), t[i].instruction + "\n");
    EXPECT_NE(read_file(d / "metadata.json").find("\"elements\""), std::string::npos);
  }
  EXPECT_FALSE(fs::exists(tmp.path() / "000012"));
}

// ---------------------------------------------------------------------------

TEST(Themes, NormalizeAndJaccard) {
  EXPECT_EQ(normalize_theme("  Lunar   New-Year!! "), "lunar new year");
  EXPECT_DOUBLE_EQ(token_jaccard("summer jazz festival", "Summer Jazz night"), 2.0 / 4.0);
  EXPECT_DOUBLE_EQ(token_jaccard("a b", "b a"), 1.0);
  EXPECT_DOUBLE_EQ(token_jaccard("a", "b"), 0.0);
}

TEST(Themes, DedupKeepsFirstOccurrenceInOrder) {
  const std::vector<Theme> in = {{"Lunar New Year", "m1"},        {"lunar new year!", "m2"},
                                 {"Summer Jazz Festival", "m1"},  {"summer jazz festival night", "m2"},
                                 {"Winter Sale", "m2"},           {"", "m1"},
                                 {"Summer Jazz Night", "m3"}};
  const auto out = dedup_themes(in);
  ASSERT_EQ(out.size(), 4u);
  EXPECT_EQ(out[0], in[0]);
  EXPECT_EQ(out[1], in[2]);
  EXPECT_EQ(out[2], in[4]);
  EXPECT_EQ(out[3], in[6]);  // Jaccard 0.5 with the festival, under 0.6
}

TEST(Themes, DedupIsIdempotentAndPairwiseDistinct) {
  std::mt19937_64 rng(17);
  const std::vector<std::string> words = {"spring", "sale", "jazz", "night", "coffee", "summer", "art", "fair"};
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Theme> in;
    for (int i = 0, n = 1 + static_cast<int>(rng() % 12); i < n; ++i) {
      std::string t;
      for (int k = 0, m = 1 + static_cast<int>(rng() % 3); k < m; ++k) t += words[rng() % words.size()] + " ";
      in.push_back({t, "m"});
    }
    const auto once = dedup_themes(in);
    EXPECT_EQ(dedup_themes(once), once);
    for (std::size_t i = 0; i < once.size(); ++i)
      for (std::size_t j = i + 1; j < once.size(); ++j) EXPECT_LT(token_jaccard(once[i].text, once[j].text), 0.6);
    // Every dropped theme is a near-duplicate of something kept.
    for (const auto& t : in) {
      const bool covered = std::any_of(once.begin(), once.end(), [&](const Theme& k) {
        return token_jaccard(k.text, t.text) >= 0.6;
      });
      EXPECT_TRUE(covered) << t.text;
    }
  }
}

TEST(Themes, SlugifyIsFilesystemSafe) {
  EXPECT_EQ(slugify("Lunar New Year!"), "lunar-new-year");
  EXPECT_EQ(slugify("***"), "theme");
  EXPECT_LE(slugify(std::string(200, 'a')).size(), 64u);
}

TEST(Themes, RequestThemesParsesJsonArray) {
  int calls = 0;
  LambdaModel m([&](const ModelQuery&) { return ++calls == 1 ? std::string("Here you go:") : R"([" Jazz ", "Tea"])"; });
  const auto t = request_themes(m, 2, "model-a");
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t[0], (Theme{"Jazz", "model-a"}));
  EXPECT_EQ(m.queries[0].substitutions.at("<count>"), "2");
  LambdaModel bad([](const ModelQuery&) { return "[1,2]"; });
  EXPECT_EQ(code_of([&] { request_themes(bad, 2, "x"); }), ErrorCode::generation);
}

// ---------------------------------------------------------------------------

std::string dict_of(std::size_t n) {
  std::string s = "{";
  for (std::size_t i = 1; i <= n; ++i) s += (i > 1 ? ", " : "") + std::to_string(i) + ": 'Step " + std::to_string(i) + "'";
  return s + "}";
}

TEST(InstructionDict, ParsesPythonStyleLiterals) {
  EXPECT_EQ(parse_instruction_dict(dict_of(3)), (std::vector<std::string>{"Step 1", "Step 2", "Step 3"}));
  const auto v = parse_instruction_dict(
      "Sure! Here it is:\n{\n  \"1\": \"Add a title \\\"Hi\\\"\",\n  'two': 'It\\'s ' 'joined',\n}\ntrailing");
  ASSERT_TRUE(v);
  EXPECT_EQ(*v, (std::vector<std::string>{"Add a title \"Hi\"", "It's joined"}));
  for (const char* bad : {"no braces", "{1: 'unterminated}", "{1 'missing colon'}", "{1: bare}", "{1: 'a' 2: 'b'}"}) {
    EXPECT_FALSE(parse_instruction_dict(bad)) << bad;
  }
  EXPECT_EQ(parse_instruction_dict("{}"), std::vector<std::string>{});
}

TEST(GenerateInstructions, AcceptsEightToTenSteps) {
  LambdaModel m([](const ModelQuery&) { return dict_of(9); });
  const auto steps = generate_instructions({"Lunar New Year", "m"}, m);
  EXPECT_EQ(steps.size(), 9u);
  ASSERT_EQ(m.queries.size(), 1u);
  const std::string& p = m.queries[0].prompt;
  EXPECT_EQ(p.find("<theme>"), std::string::npos);
  const auto first = p.find("Lunar New Year");
  ASSERT_NE(first, std::string::npos);
  EXPECT_EQ(p.find("Lunar New Year", first + 1), std::string::npos);
}

TEST(GenerateInstructions, RejectsShortSequencesAfterOneRetry) {
  LambdaModel short_twice([](const ModelQuery&) { return dict_of(6); });
  EXPECT_EQ(code_of([&] { generate_instructions({"Tea", "m"}, short_twice); }), ErrorCode::generation);
  EXPECT_EQ(short_twice.queries.size(), 2u);

  int calls = 0;
  LambdaModel recovers([&](const ModelQuery&) { return dict_of(++calls == 1 ? 11 : 8); });
  EXPECT_EQ(generate_instructions({"Tea", "m"}, recovers).size(), 8u);
  EXPECT_EQ(code_of([&] { generate_instructions({"  ", "m"}, recovers); }), ErrorCode::validation);
}

TEST(FilterInstructions, YesKeepsNoDropsAmbiguousIsKept) {
  const std::vector<std::vector<std::string>> seqs = {{"a", "b"}, {"c"}, {"d"}, {"e"}};
  LambdaModel m([](const ModelQuery& q) -> std::string {
    const auto& text = q.substitutions.at("<instructions>");
    if (text == "1. a\n2. b") return "Yes";
    if (text == "1. c") return "No.";
    if (text == "1. d") return "It depends";
    return "yes";
  });
  const auto r = filter_instructions(seqs, m, 3);
  EXPECT_EQ(r.kept_indices, (std::vector<std::size_t>{0, 2, 3}));
  EXPECT_EQ(r.kept.size(), 3u);
  EXPECT_EQ(r.judged, 4u);
  EXPECT_DOUBLE_EQ(r.kept_fraction, 0.75);
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_NE(r.warnings[0].find("sequence 2"), std::string::npos);
  EXPECT_EQ(m.queries.size(), 5u);
  for (const auto& q : m.queries) EXPECT_EQ(q.template_id, "instruction-filter-v1");
}

TEST(FilterInstructions, TransportFailurePropagates) {
  LambdaModel m([](const ModelQuery&) -> std::string { throw Error(ErrorCode::backend_transport, "down"); });
  EXPECT_EQ(code_of([&] { filter_instructions({{"a"}, {"b"}}, m); }), ErrorCode::backend_transport);
  LambdaModel unused([](const ModelQuery&) { return "Yes"; });
  EXPECT_DOUBLE_EQ(filter_instructions({}, unused).kept_fraction, 1.0);
}

}  // namespace
}  // namespace sledge::ideation
