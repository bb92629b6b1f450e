// sledge: command-line front-end to the design engine.
//
// Exit codes: 0 success, 1 validation / unknown document, 2 backend or transport failure.

#include <CLI11.hpp>
#include <algorithm>
#include <csignal>
#include <filesystem>
#include <iostream>
#include <json.hpp>
#include <thread>

#include "sledge/backends.hpp"
#include "sledge/bundle.hpp"
#include "sledge/engine.hpp"
#include "sledge/eval.hpp"
#include "sledge/ideation.hpp"
#include "sledge/image_io.hpp"
#include "sledge/service.hpp"

namespace fs = std::filesystem;
using namespace sledge;

namespace {

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::backend_transport:
    case ErrorCode::protocol:
    case ErrorCode::fixture:
      return 2;
    default:
      return 1;
  }
}

void print_warnings(const Warnings& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

Session open_doc(const fs::path& doc) {
  if (!fs::exists(doc / "document.json")) throw Error(ErrorCode::not_found, "no design document at " + doc.string());
  return service::load_session(doc, doc.filename().string());
}

struct NewOpts {
  std::string doc;
  int width = 1024;
  int height = 1024;
  std::string background = "#FFFFFFFF";
  std::string theme;
};

int cmd_new(const NewOpts& o) {
  if (fs::exists(fs::path(o.doc) / "document.json")) {
    throw Error(ErrorCode::validation, o.doc + " already holds a document");
  }
  std::optional<std::string> theme;
  if (!o.theme.empty()) theme = o.theme;
  auto doc = make_document(o.width, o.height, parse_color(o.background), theme);
  service::save_session(Session(fs::path(o.doc).filename().string(), std::move(doc)), o.doc);
  std::cout << o.doc << "\n";
  return 0;
}

struct StepOpts {
  std::string doc;
  std::string instruction;
  std::string asset;
  std::uint64_t seed = 0;
  int dilation = -1;
  bool no_refine = false;
};

int cmd_step(const StepOpts& o) {
  Session session = open_doc(o.doc);
  const Backends backends = backends_from_env();
  StepEngine engine(backends.generator, backends.refiner, FontRegistry::shared_default());
  StepRequest req;
  req.instruction = o.instruction;
  req.seed = o.seed;
  req.refine = !o.no_refine;
  if (o.dilation >= 0) req.dilation_radius = o.dilation;
  if (!o.asset.empty()) req.asset = decode_png(read_file(o.asset));
  const StepOutcome out = engine.apply_step(session, req);
  service::save_session(session, o.doc);
  print_warnings(out.warnings);
  std::cout << service::step_record_json(out.record, out.warnings) << "\n";
  return 0;
}

struct RenderOpts {
  std::string doc;
  int upto = -1;
  std::string out;
};

int cmd_render(const RenderOpts& o) {
  const Session session = open_doc(o.doc);
  const std::size_t upto = o.upto < 0 ? session.cursor() : static_cast<std::size_t>(o.upto);
  Warnings warnings;
  const Canvas c = flatten(session.document(), upto, FontRegistry::shared_default(), &warnings);
  print_warnings(warnings);
  write_file(o.out, encode_png(c));
  return 0;
}

struct EditOpts {
  std::string doc;
  std::size_t step = 0;
  std::size_t element = 0;
  std::optional<std::string> color;
  std::optional<int> size;
  std::optional<std::string> content;
  std::optional<std::string> font;
};

int cmd_edit_text(const EditOpts& o) {
  Session session = open_doc(o.doc);
  TextPatch patch;
  if (o.color) patch.color = parse_color(*o.color);
  if (o.size) patch.font_size = *o.size;
  if (o.content) patch.content = *o.content;
  if (o.font) patch.font_family = *o.font;
  session.edit_text(o.step, o.element, patch);
  service::save_session(session, o.doc);
  std::cout << service::step_record_json(session.document().steps[o.step]) << "\n";
  return 0;
}

struct DatasetOpts {
  std::string bundles;
  std::string out;
  bool model_orderer = false;
  std::size_t sample = 0;
};

int cmd_dataset_build(const DatasetOpts& o) {
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(o.bundles)) {
    if (entry.is_directory() && fs::exists(entry.path() / "bundle.json")) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty()) throw Error(ErrorCode::not_found, "no bundles under " + o.bundles);

  std::shared_ptr<ModelClient> model;
  if (o.model_orderer) model = backends_from_env().model;

  std::vector<ideation::Triplet> all;
  for (const auto& dir : dirs) {
    const auto bundle = ideation::load_layered_bundle(dir);
    const auto order = ideation::order_elements(bundle, model.get());
    print_warnings(order.warnings);
    std::vector<std::string> instructions;
    for (const auto& el : bundle.elements) instructions.push_back(ideation::default_instruction(el));
    auto triplets = ideation::build_triplets(bundle, order.order, instructions);
    all.insert(all.end(), std::make_move_iterator(triplets.begin()), std::make_move_iterator(triplets.end()));
  }

  if (o.sample > 0) {
    // Evenly spaced picks for manual review instead of the full dataset.
    std::vector<ideation::Triplet> picked;
    const std::size_t n = std::min(o.sample, all.size());
    for (std::size_t i = 0; i < n; ++i) picked.push_back(all[i * all.size() / n]);
    ideation::write_triplets(picked, o.out, 0);
    std::string sheet = "| # | instruction | before | after | ok? |\n|---|---|---|---|---|\n";
    for (std::size_t i = 0; i < picked.size(); ++i) {
      char name[16];
      std::snprintf(name, sizeof name, "%06zu", i);
      sheet += "| " + std::to_string(i) + " | " + picked[i].instruction + " | " + name + "/before.png | " + name +
               "/after.png | |\n";
    }
    write_file(fs::path(o.out) / "review.md", sheet);
    std::cout << n << " sampled triplets written to " << o.out << "\n";
    return 0;
  }
  const std::size_t next = ideation::write_triplets(all, o.out, 0);
  std::cout << next << " triplets from " << dirs.size() << " bundles written to " << o.out << "\n";
  return 0;
}

struct BenchOpts {
  std::size_t themes = 10;
  std::string out;
  std::string themes_file;
  std::string source = "model";
  std::size_t max_in_flight = 4;
};

int cmd_bench_gen(const BenchOpts& o) {
  auto model = backends_from_env().model;
  std::vector<ideation::Theme> themes;
  if (!o.themes_file.empty()) {
    const auto j = nlohmann::json::parse(read_file(o.themes_file), nullptr, false);
    if (j.is_discarded() || !j.is_array()) throw Error(ErrorCode::validation, o.themes_file + " must be a JSON array");
    for (const auto& t : j) {
      if (!t.is_string()) throw Error(ErrorCode::validation, o.themes_file + " must hold strings");
      themes.push_back({t.get<std::string>(), o.source});
    }
  } else {
    themes = ideation::request_themes(*model, o.themes, o.source);
  }
  const std::size_t requested = themes.size();
  themes = ideation::dedup_themes(themes);

  std::vector<ideation::Theme> accepted;
  std::vector<std::vector<std::string>> sequences;
  nlohmann::ordered_json rejected = nlohmann::ordered_json::array();
  for (const auto& t : themes) {
    try {
      sequences.push_back(ideation::generate_instructions(t, *model));
      accepted.push_back(t);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::generation) throw;
      std::cerr << "skipped: " << e.what() << "\n";
      rejected.push_back({{"theme", t.text}, {"reason", e.what()}});
    }
  }
  const auto filtered = ideation::filter_instructions(sequences, *model, o.max_in_flight);
  print_warnings(filtered.warnings);

  const fs::path out(o.out);
  fs::create_directories(out / "instructions");
  nlohmann::ordered_json themes_json = nlohmann::ordered_json::array();
  std::size_t steps = 0;
  for (std::size_t k = 0; k < filtered.kept.size(); ++k) {
    const auto& theme = accepted[filtered.kept_indices[k]];
    const std::string slug = ideation::slugify(theme.text);
    themes_json.push_back({{"theme", theme.text}, {"source", theme.source}, {"slug", slug}});
    nlohmann::ordered_json seq{{"theme", theme.text}, {"steps", filtered.kept[k]}};
    write_file(out / "instructions" / (slug + ".json"), seq.dump(2) + "\n");
    steps += filtered.kept[k].size();
  }
  write_file(out / "themes.json", themes_json.dump(2) + "\n");
  nlohmann::ordered_json summary{{"themes_requested", requested},
                                 {"themes_after_dedup", themes.size()},
                                 {"sequences_generated", sequences.size()},
                                 {"sequences_kept", filtered.kept.size()},
                                 {"kept_fraction", filtered.kept_fraction},
                                 {"instructions", steps},
                                 {"rejected", rejected}};
  write_file(out / "summary.json", summary.dump(2) + "\n");
  std::cout << filtered.kept.size() << " themes, " << steps << " instructions written to " << o.out << "\n";
  return 0;
}

struct EvalOpts {
  std::string manifest;
  std::string out;
};

int cmd_eval_run(const EvalOpts& o) {
  const auto report = eval::run_manifest(o.manifest);
  const fs::path out = o.out.empty() ? fs::path(o.manifest).parent_path() / "report" : fs::path(o.out);
  eval::write_report(report, out);
  std::cout << report.table;
  return 0;
}

struct ServeOpts {
  std::string store;
  std::string host;
  int port = -1;
};

service::DesignService* g_service = nullptr;

int cmd_serve(const ServeOpts& o) {
  auto config = service::config_from_env();
  if (!o.store.empty()) config.store_dir = o.store;
  if (!o.host.empty()) config.host = o.host;
  if (o.port >= 0) config.port = o.port;
  service::DesignService svc(config, backends_from_env(), FontRegistry::shared_default());
  g_service = &svc;
  std::signal(SIGINT, [](int) {
    if (g_service) g_service->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_service) g_service->stop();
  });
  std::cout << "listening on http://" << config.host << ":" << config.port << " (store "
            << config.store_dir.string() << ")\n"
            << std::flush;
  svc.listen();  // returns once a signal stops the server
  g_service = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sledge: iterative layered design engine"};
  app.require_subcommand(1);

  NewOpts new_opts;
  auto* c_new = app.add_subcommand("new", "Create an empty design document");
  c_new->add_option("--doc", new_opts.doc, "Document directory")->required();
  c_new->add_option("--width", new_opts.width, "Canvas width")->check(CLI::PositiveNumber);
  c_new->add_option("--height", new_opts.height, "Canvas height")->check(CLI::PositiveNumber);
  c_new->add_option("--background", new_opts.background, "Background colour #RRGGBB[AA]");
  c_new->add_option("--theme", new_opts.theme, "Design theme");

  StepOpts step_opts;
  auto* c_step = app.add_subcommand("step", "Apply one instruction to a document");
  c_step->add_option("--doc", step_opts.doc, "Document directory")->required();
  c_step->add_option("--instruction", step_opts.instruction, "Instruction text")->required();
  c_step->add_option("--asset", step_opts.asset, "PNG to insert");
  c_step->add_option("--seed", step_opts.seed, "Generator seed");
  c_step->add_option("--dilation", step_opts.dilation, "Mask dilation radius in pixels");
  c_step->add_flag("--no-refine", step_opts.no_refine, "Skip mask refinement");

  RenderOpts render_opts;
  auto* c_render = app.add_subcommand("render", "Flatten a document to PNG");
  c_render->add_option("--doc", render_opts.doc, "Document directory")->required();
  c_render->add_option("--upto", render_opts.upto, "Number of steps to include (default: cursor)");
  c_render->add_option("--out", render_opts.out, "Output PNG")->required();

  EditOpts edit_opts;
  auto* c_edit = app.add_subcommand("edit-text", "Change a text element after the fact");
  c_edit->add_option("--doc", edit_opts.doc, "Document directory")->required();
  c_edit->add_option("--step", edit_opts.step, "Step index")->required();
  c_edit->add_option("--element", edit_opts.element, "Element index")->required();
  c_edit->add_option("--color", edit_opts.color, "Colour #RRGGBB[AA]");
  c_edit->add_option("--size", edit_opts.size, "Font size in pixels");
  c_edit->add_option("--content", edit_opts.content, "Text content");
  c_edit->add_option("--font", edit_opts.font, "Font family token");

  auto* c_dataset = app.add_subcommand("dataset", "Dataset pipelines");
  c_dataset->require_subcommand(1);
  DatasetOpts dataset_opts;
  auto* c_build = c_dataset->add_subcommand("build", "Turn layered bundles into step triplets");
  c_build->add_option("--bundles", dataset_opts.bundles, "Directory of bundle folders")->required()->check(CLI::ExistingDirectory);
  c_build->add_option("--out", dataset_opts.out, "Output directory")->required();
  c_build->add_flag("--model-orderer", dataset_opts.model_orderer, "Ask the configured model for element order");
  c_build->add_option("--sample", dataset_opts.sample, "Write only N evenly spaced triplets plus review.md");

  auto* c_bench = app.add_subcommand("bench", "Benchmark pipelines");
  c_bench->require_subcommand(1);
  BenchOpts bench_opts;
  auto* c_gen = c_bench->add_subcommand("gen", "Generate themes and instruction sequences");
  c_gen->add_option("--themes", bench_opts.themes, "Number of themes to request");
  c_gen->add_option("--themes-file", bench_opts.themes_file, "JSON array of themes instead of asking the model");
  c_gen->add_option("--source", bench_opts.source, "Source tag recorded per theme");
  c_gen->add_option("--max-in-flight", bench_opts.max_in_flight, "Concurrent filter requests");
  c_gen->add_option("--out", bench_opts.out, "Output directory")->required();

  auto* c_eval = app.add_subcommand("eval", "Evaluation");
  c_eval->require_subcommand(1);
  EvalOpts eval_opts;
  auto* c_run = c_eval->add_subcommand("run", "Run an evaluation manifest");
  c_run->add_option("--manifest", eval_opts.manifest, "Manifest JSON")->required();
  c_run->add_option("--out", eval_opts.out, "Report directory (default: <manifest dir>/report)");

  ServeOpts serve_opts;
  auto* c_serve = app.add_subcommand("serve", "Run the HTTP service");
  c_serve->add_option("--store", serve_opts.store, "Session store directory (SLEDGE_STORE_DIR)");
  c_serve->add_option("--host", serve_opts.host, "Bind address");
  c_serve->add_option("--port", serve_opts.port, "Port (SLEDGE_PORT, default 8787)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (c_new->parsed()) return cmd_new(new_opts);
    if (c_step->parsed()) return cmd_step(step_opts);
    if (c_render->parsed()) return cmd_render(render_opts);
    if (c_edit->parsed()) return cmd_edit_text(edit_opts);
    if (c_build->parsed()) return cmd_dataset_build(dataset_opts);
    if (c_gen->parsed()) return cmd_bench_gen(bench_opts);
    if (c_run->parsed()) return cmd_eval_run(eval_opts);
    if (c_serve->parsed()) return cmd_serve(serve_opts);
  } catch (const Error& e) {
    std::cerr << "sledge: " << to_string(e.code()) << ": " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "sledge: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
