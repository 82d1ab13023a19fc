#include "spinecurve/cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>

int main(int argc, char** argv)
{
    namespace cli = spinecurve::cli;

    CLI::App app { "Spinal curvature measurement from lamina detections" };
    app.require_subcommand(1);

    cli::MeasureOptions measure;
    std::string svg_dir;
    auto* measure_cmd = app.add_subcommand("measure", "Measure the curvature of every image in a detection file");
    measure_cmd->add_option("--detections", measure.detections, "Detection JSON")->required();
    measure_cmd->add_option("--out", measure.out, "Results JSON to write")->required();
    measure_cmd->add_option("--min-score", measure.min_score, "Minimum detection score")->capture_default_str();
    measure_cmd->add_option("--degree", measure.degree, "Polynomial degree")->capture_default_str();
    measure_cmd->add_option("--svg", svg_dir, "Directory for per-image SVG overlays");

    cli::EvalDetOptions eval_det;
    auto* eval_det_cmd = app.add_subcommand("eval-det", "Average precision of detections against annotations");
    eval_det_cmd->add_option("--detections", eval_det.detections, "Detection JSON")->required();
    eval_det_cmd->add_option("--annotations", eval_det.annotations, "Annotation JSON with ground_truth boxes")->required();
    eval_det_cmd->add_option("--iou", eval_det.iou_threshold, "IoU threshold")->capture_default_str();

    cli::EvalAngleOptions eval_angle;
    auto* eval_angle_cmd = app.add_subcommand("eval-angle", "MAD, SD and Pearson R of measured angles against a reference");
    eval_angle_cmd->add_option("--results", eval_angle.results, "Results JSON")->required();
    eval_angle_cmd->add_option("--reference", eval_angle.reference, "Angle CSV or truth CSV")->required();
    eval_angle_cmd->add_option("--column", eval_angle.column, "Reference column")
        ->required()
        ->check(CLI::IsMember({ "manual", "cobb", "true" }));

    cli::SynthOptions synth;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic phantom suite");
    synth_cmd->add_option("--n", synth.n, "Number of images")->required();
    synth_cmd->add_option("--seed", synth.seed, "Suite seed")->required();
    synth_cmd->add_option("--noise-px", synth.noise_px, "Center jitter sigma in pixels")->capture_default_str();
    synth_cmd->add_option("--fp-count", synth.fp_count, "False positives per image")->capture_default_str();
    synth_cmd->add_option("--dropout", synth.dropout, "Per-lamina dropout probability")->capture_default_str();
    synth_cmd->add_option("--out", synth.out_dir, "Output directory")->required();

    cli::RenderOptions render;
    auto* render_cmd = app.add_subcommand("render", "Render SVG overlays from detections and results");
    render_cmd->add_option("--detections", render.detections, "Detection JSON")->required();
    render_cmd->add_option("--results", render.results, "Results JSON")->required();
    render_cmd->add_option("--out", render.out_dir, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : cli::kExitFailure;
    }

    if (*measure_cmd) {
        if (!svg_dir.empty()) {
            measure.svg_dir = svg_dir;
        }
        return cli::cmd_measure(measure, std::cout, std::cerr);
    }
    if (*eval_det_cmd) {
        return cli::cmd_eval_det(eval_det, std::cout, std::cerr);
    }
    if (*eval_angle_cmd) {
        return cli::cmd_eval_angle(eval_angle, std::cout, std::cerr);
    }
    if (*synth_cmd) {
        return cli::cmd_synth(synth, std::cout, std::cerr);
    }
    return cli::cmd_render(render, std::cout, std::cerr);
}
