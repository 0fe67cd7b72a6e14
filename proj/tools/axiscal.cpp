// axiscal command line: simulation, enhancement, training and the correction loop.
#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "axiscal/config.hpp"
#include "axiscal/pipeline.hpp"

using namespace axiscal;
using nlohmann::json;

namespace {

Roi parse_roi(const std::vector<Index>& v) {
  if (v.size() != 4) throw Error(ErrorCode::InvalidArgument, "--roi expects x0 y0 width height");
  return Roi{v[0], v[1], v[2], v[3]};
}

json roi_json(const Roi& r) { return {{"x0", r.x0}, {"y0", r.y0}, {"width", r.width}, {"height", r.height}}; }

std::uint64_t seeded(std::uint64_t configured) { return seed_override().value_or(configured); }

std::optional<MdcNet> maybe_weights(const std::string& path, double* b_const) {
  if (path.empty()) return std::nullopt;
  return load_weights(path, b_const);
}

template <typename T>
T load_or_default(const std::string& path) {
  return path.empty() ? T{} : parse_config<T>(read_text_file(path));
}

// Output stream that is stdout unless a path is given.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_.open(path);
    if (!file_) throw Error(ErrorCode::IoError, "cannot write " + path);
  }
  std::ostream& get() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

void print_error(const std::string& code, const std::string& message) {
  std::cerr << json{{"error", code}, {"message", message}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Eccentricity correction toolkit for aspheric element alignment"};
  app.require_subcommand(1);

  // simulate
  std::string sim_config, sim_out, sim_truth;
  auto* simulate = app.add_subcommand("simulate", "Render a (degraded) crosshair scene to PGM");
  simulate->add_option("--config", sim_config, "Scene/degradation JSON");
  simulate->add_option("--out", sim_out, "Output PGM")->required();
  simulate->callback([&] {
    auto req = load_or_default<SimulateRequest>(sim_config);
    req.degrade.seed = seeded(req.degrade.seed);
    const Scene scene = render_crosshair(req.scene);
    const GrayImage img = req.apply_degrade ? degrade(scene.image, req.degrade) : scene.image;
    write_pgm(sim_out, img);
    std::cout << json{{"cx", scene.cx}, {"cy", scene.cy}, {"width", img.cols()}, {"height", img.rows()},
                      {"smd2", smd2(img)}}
                     .dump()
              << '\n';
  });

  // enhance
  std::string enh_in, enh_out, enh_method = "auto", enh_weights;
  int enh_subsample = 1;
  AeaConfig enh_aea;
  auto* enhance = app.add_subcommand("enhance", "Enhance a defocused ROI");
  enhance->add_option("--in", enh_in, "Input PGM")->required();
  enhance->add_option("--out", enh_out, "Output PGM")->required();
  enhance->add_option("--method", enh_method, "gfa | mdcnet | maxmin | auto")
      ->check(CLI::IsMember({"gfa", "mdcnet", "maxmin", "auto"}));
  enhance->add_option("--weights", enh_weights, "MDC-Net weights JSON");
  enhance->add_option("--subsample", enh_subsample, "Guided filter subsampling (1 = exact)");
  enhance->add_option("--thr-direct", enh_aea.thr_direct, "AEA direct threshold");
  enhance->add_option("--thr-mdc", enh_aea.thr_mdc, "AEA MDC-Net threshold");
  enhance->callback([&] {
    const GrayImage img = read_pgm(enh_in);
    enh_aea.dehaze.subsample_s = enh_subsample;
    enh_aea.weights = maybe_weights(enh_weights, &enh_aea.b_const);
    const auto t0 = std::chrono::steady_clock::now();
    GrayImage out;
    std::string path = enh_method;
    if (enh_method == "auto") {
      AeaResult r = aea_dispatch(img, enh_aea);
      out = std::move(r.enhanced);
      path = to_string(r.path);
    } else if (enh_method == "gfa") {
      out = gfa_enhance(img, enh_aea.dehaze);
    } else if (enh_method == "maxmin") {
      out = max_min_stretch(img);
    } else {
      if (!enh_aea.weights) throw Error(ErrorCode::MissingWeights, "--method mdcnet needs --weights");
      out = mdcnet_enhance(*enh_aea.weights, img, enh_aea.b_const);
    }
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    write_pgm(enh_out, out);
    std::cout << json{{"method", path}, {"smd2_before", smd2(img)}, {"smd2_after", smd2(out)}, {"wall_ms", ms}}.dump()
              << '\n';
  });

  // train
  std::string tr_config, tr_out, tr_loss;
  std::size_t tr_pairs = 100;
  Index tr_roi = 64;
  TrainConfig tr_cfg;
  tr_cfg.epochs = 30;
  std::uint64_t tr_init_seed = 42;
  auto* train_cmd = app.add_subcommand("train", "Build GFA pairs and train MDC-Net");
  train_cmd->add_option("--config", tr_config, "JSON with optional \"train\" and \"dataset\" objects");
  train_cmd->add_option("--pairs", tr_pairs, "Number of training pairs");
  train_cmd->add_option("--roi", tr_roi, "ROI side length");
  train_cmd->add_option("--epochs", tr_cfg.epochs);
  train_cmd->add_option("--batch", tr_cfg.batch_size);
  train_cmd->add_option("--lr-start", tr_cfg.lr_start);
  train_cmd->add_option("--lr-end", tr_cfg.lr_end);
  train_cmd->add_option("--momentum", tr_cfg.momentum);
  train_cmd->add_option("--seed", tr_cfg.seed, "Shuffling and initialization seed");
  train_cmd->add_option("--out", tr_out, "Weights JSON")->required();
  train_cmd->add_option("--loss-csv", tr_loss, "Loss history CSV (default stdout)");
  train_cmd->callback([&] {
    DatasetSpec ds;
    if (!tr_config.empty()) {
      const json doc = json::parse(read_text_file(tr_config));
      if (doc.contains("train")) tr_cfg = doc["train"].get<TrainConfig>();
      if (doc.contains("dataset")) ds = doc["dataset"].get<DatasetSpec>();
    }
    tr_cfg.seed = seeded(tr_cfg.seed);
    tr_init_seed = tr_cfg.seed;
    ds.seed = seeded(ds.seed);
    const auto data = build_dataset(ds, tr_pairs, tr_roi);
    const TrainResult result = train(MdcNet::xavier(tr_init_seed), data, tr_cfg);
    save_weights(tr_out, result.net, tr_cfg.b_const);
    Sink sink(tr_loss);
    sink.get() << "epoch,lr,loss\n" << std::setprecision(17);
    for (std::size_t e = 0; e < result.epoch_loss.size(); ++e)
      sink.get() << e << ',' << result.epoch_lr[e] << ',' << result.epoch_loss[e] << '\n';
  });

  // gradcheck
  GradCheckOptions gc;
  Index gc_size = 8;
  bool gc_keep_kinks = false;
  std::uint64_t gc_net_seed = 1;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of MDC-Net gradients");
  gradcheck->add_option("--size", gc_size, "Side of the random input/target pair");
  gradcheck->add_option("--samples", gc.samples);
  gradcheck->add_option("--epsilon", gc.epsilon);
  gradcheck->add_option("--abs-floor", gc.abs_floor, "Relative-error denominator floor");
  gradcheck->add_option("--seed", gc_net_seed, "Network and data seed");
  gradcheck->add_flag("--keep-kinks", gc_keep_kinks, "Do not redraw parameters whose probes flip a ReLU");
  gradcheck->callback([&] {
    gc_net_seed = seeded(gc_net_seed);
    gc.seed = gc_net_seed;
    gc.skip_kinks = !gc_keep_kinks;
    std::mt19937_64 rng(gc_net_seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    DatasetPair pair;
    pair.input = GrayImage::NullaryExpr(gc_size, gc_size, [&] { return u(rng); });
    pair.target = GrayImage::NullaryExpr(gc_size, gc_size, [&] { return u(rng); });
    const GradCheckResult r = grad_check(MdcNet::xavier(gc_net_seed), pair, gc);
    std::cout << json{{"max_relative_error", r.max_relative_error}, {"checked", r.checked},
                      {"skipped_kinks", r.skipped_kinks}}
                     .dump()
              << '\n';
  });

  // extract
  std::string ex_in, ex_weights;
  std::vector<Index> ex_roi;
  ThresholdParams ex_thr;
  int ex_se = 3;
  AeaConfig ex_aea;
  auto* extract = app.add_subcommand("extract", "Locate the crosshair center in an image");
  extract->add_option("--in", ex_in, "Input PGM")->required();
  extract->add_option("--roi", ex_roi, "x0 y0 width height (default: block search)")->expected(4);
  extract->add_option("--weights", ex_weights, "MDC-Net weights for the AEA middle band");
  extract->add_option("--ksize", ex_thr.ksize, "Threshold window");
  extract->add_option("--offset", ex_thr.offset_c, "Threshold offset");
  extract->add_option("--se", ex_se, "Erosion element size");
  extract->callback([&] {
    const GrayImage img = read_pgm(ex_in);
    ex_aea.weights = maybe_weights(ex_weights, &ex_aea.b_const);
    const Roi roi = ex_roi.empty() ? bdma(img).head().roi : parse_roi(ex_roi);
    const AeaResult enhanced = aea_dispatch(crop(img, roi), ex_aea);
    const Point2 c = extract_center(enhanced.enhanced, roi, ex_thr, ex_se);
    std::cout << json{{"x", c.x()}, {"y", c.y()}, {"roi", roi_json(roi)}, {"path", to_string(enhanced.path)},
                      {"smd2", enhanced.smd2_before}}
                     .dump()
              << '\n';
  });

  // correct
  std::string co_config, co_weights, co_out;
  auto* correct = app.add_subcommand("correct", "Run the eccentricity correction loop on the virtual rig");
  correct->add_option("--config", co_config, "Rig/loop JSON");
  correct->add_option("--weights", co_weights, "MDC-Net weights (full-image mode)");
  correct->add_option("--out", co_out, "CSV output (default stdout)");
  correct->callback([&] {
    auto req = load_or_default<CorrectRequest>(co_config);
    req.rig.seed = seeded(req.rig.seed);
    req.full.degrade.seed = seeded(req.full.degrade.seed);
    req.full.aea.weights = maybe_weights(co_weights, &req.full.aea.b_const);
    VirtualRig rig(req.rig);
    const CenterObserver observer = req.full_image ? full_image_observer(req.full, req.rig.axis_px) : CenterObserver{};
    const CorrectionLog log = correction_loop(rig, req.loop, observer);
    Sink sink(co_out);
    write_csv(sink.get(), log);
    std::cerr << json{{"converged", log.converged}, {"moves", log.moves},
                      {"final_ecc_um", {log.final_ecc_um.x(), log.final_ecc_um.y()}},
                      {"final_ecc_norm_um", log.final_ecc_um.norm()}}
                     .dump()
              << '\n';
  });

  // bench
  std::vector<Index> be_scales{200, 300, 500};
  std::size_t be_per_scale = 10;
  std::vector<std::string> be_methods{"maxmin", "gfa", "fastgfa", "mdcnet"};
  std::string be_weights, be_out;
  bool be_summary = false;
  BenchOptions be_opts;
  std::uint64_t be_seed = 7;
  auto* bench = app.add_subcommand("bench", "Time the enhancement methods on a synthetic corpus");
  bench->add_option("--scales", be_scales, "ROI side lengths")->delimiter(',');
  bench->add_option("--per-scale", be_per_scale, "Images per scale");
  bench->add_option("--methods", be_methods, "maxmin,gfa,fastgfa,mdcnet")
      ->delimiter(',')
      ->check(CLI::IsMember({"maxmin", "gfa", "fastgfa", "mdcnet"}));
  bench->add_option("--reps", be_opts.repetitions, "Timed repetitions per cell (median)");
  bench->add_option("--weights", be_weights, "MDC-Net weights JSON");
  bench->add_option("--seed", be_seed, "Corpus seed");
  bench->add_option("--out", be_out, "CSV output (default stdout)");
  bench->add_flag("--summary", be_summary, "Print per-(method, scale) means instead of rows");
  bench->callback([&] {
    be_opts.methods.clear();
    for (const auto& m : be_methods) {
      if (m == "maxmin") be_opts.methods.push_back(BenchMethod::MaxMin);
      if (m == "gfa") be_opts.methods.push_back(BenchMethod::Gfa);
      if (m == "fastgfa") be_opts.methods.push_back(BenchMethod::FastGfa);
      if (m == "mdcnet") be_opts.methods.push_back(BenchMethod::MdcNet);
    }
    be_opts.weights = maybe_weights(be_weights, &be_opts.b_const);
    const auto corpus = make_bench_corpus(be_scales, be_per_scale, seeded(be_seed));
    const auto rows = bench_report(corpus, be_opts);
    Sink sink(be_out);
    if (be_summary)
      write_csv(sink.get(), summarize(rows));
    else
      write_csv(sink.get(), rows);
  });

  // metrics
  std::vector<std::string> me_stack;
  std::vector<Index> me_roi;
  std::vector<std::string> me_metrics;
  StackSpec me_sim;
  me_sim.scene.image_w = me_sim.scene.image_h = 200;
  bool me_simulate = false;
  auto* metrics = app.add_subcommand("metrics", "Focus-metric sensitivity report over a focus stack");
  metrics->add_option("--stack", me_stack, "Stack images in axial order (PGM)");
  metrics->add_flag("--simulate", me_simulate, "Use a simulated stack instead of files");
  metrics->add_option("--count", me_sim.count, "Simulated stack length");
  metrics->add_option("--sharp", me_sim.sharp_index, "Simulated in-focus index");
  metrics->add_option("--roi", me_roi, "x0 y0 width height (default: whole image)")->expected(4);
  metrics->add_option("--metrics", me_metrics, "Subset of metrics")->delimiter(',');
  metrics->callback([&] {
    FocusStack stack;
    if (me_simulate) {
      me_sim.degrade.seed = seeded(me_sim.degrade.seed);
      stack = simulate_focus_stack(me_sim);
    } else {
      for (const auto& path : me_stack) stack.images.push_back(read_pgm(path));
    }
    if (stack.images.empty()) throw Error(ErrorCode::EmptyStack, "give --stack files or --simulate");
    const GrayImage& first = stack.images.front();
    const Roi roi = me_roi.empty() ? Roi{0, 0, first.cols(), first.rows()} : parse_roi(me_roi);
    std::vector<MetricKind> kinds;
    for (const auto& name : me_metrics) {
      const auto kind = metric_from_string(name);
      if (!kind) throw Error(ErrorCode::InvalidArgument, "unknown metric '" + name + "'");
      kinds.push_back(*kind);
    }
    const auto report = kinds.empty() ? metric_sensitivity_report(stack, roi)
                                      : metric_sensitivity_report(stack, roi, kinds);
    write_csv(std::cout, report);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("Usage", e.what());
    return 2;
  } catch (const Error& e) {
    print_error(to_string(e.code()), e.what());
    return 1;
  } catch (const json::exception& e) {
    print_error(to_string(ErrorCode::FormatError), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("Internal", e.what());
    return 1;
  }
  return 0;
}
