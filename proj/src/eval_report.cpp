#include "imfas/eval_report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "imfas/errors.hpp"
#include "imfas/ranking_loss.hpp"

namespace imfas {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string format_fixed3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

std::string format_g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// 0.1 -> "10%", 1.0 -> "100%", 0.125 -> "12.5%".
std::string percent_label(double fraction) {
    const double pct = fraction * 100.0;
    const double rounded = std::round(pct);
    char buf[32];
    if (std::abs(pct - rounded) < 1e-9) {
        std::snprintf(buf, sizeof(buf), "%.0f%%", rounded);
    } else {
        std::snprintf(buf, sizeof(buf), "%g%%", pct);
    }
    return buf;
}

std::string fraction_key(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", fraction);
    return buf;
}

std::string render_markdown(const EvalReport& report) {
    // The first fraction whose mean strictly exceeds the SH mean is bolded.
    int bold_idx = -1;
    for (std::size_t i = 0; i < report.aggregate.size(); ++i) {
        if (report.aggregate[i].mean > report.sh.mean) {
            bold_idx = static_cast<int>(i);
            break;
        }
    }

    std::ostringstream out;
    out << "| Dataset |";
    for (double q : report.fractions) out << ' ' << percent_label(q) << " |";
    out << " SH |\n";
    out << "| --- |";
    for (std::size_t i = 0; i < report.fractions.size(); ++i) out << " --- |";
    out << " --- |\n";
    out << "| " << report.name << " |";
    for (std::size_t i = 0; i < report.aggregate.size(); ++i) {
        const std::string cell = format_fixed3(report.aggregate[i].mean) + " ± " +
                                 format_fixed3(report.aggregate[i].sd);
        if (static_cast<int>(i) == bold_idx) {
            out << " **" << cell << "** |";
        } else {
            out << ' ' << cell << " |";
        }
    }
    out << ' ' << format_fixed3(report.sh.mean) << " ± " << format_fixed3(report.sh.sd)
        << " |\n";
    return out.str();
}

std::string render_json(const EvalReport& report) {
    ordered_json root;
    root["schema_version"] = 1;
    root["name"] = report.name;
    root["fractions"] = report.fractions;
    root["seeds"] = report.seeds;

    ordered_json per_seed = ordered_json::array();
    for (const SeedEval& se : report.per_seed) {
        ordered_json entry;
        entry["seed"] = se.seed;
        entry["n_train"] = se.n_train;
        entry["n_test"] = se.n_test;
        entry["test_dataset_ids"] = se.test_dataset_ids;
        ordered_json fracs;
        for (const FractionEval& fe : se.fractions) {
            ordered_json fj;
            ordered_json per_dataset;
            for (std::size_t d = 0; d < fe.per_dataset.size(); ++d) {
                per_dataset[se.test_dataset_ids[d]] = fe.per_dataset[d];
            }
            fj["per_dataset"] = per_dataset;
            fj["mean"] = fe.mean;
            fracs[fraction_key(fe.fraction)] = fj;
        }
        entry["fractions"] = fracs;
        ordered_json sh;
        ordered_json sh_per_dataset;
        for (std::size_t d = 0; d < se.sh_per_dataset.size(); ++d) {
            sh_per_dataset[se.test_dataset_ids[d]] = se.sh_per_dataset[d];
        }
        sh["per_dataset"] = sh_per_dataset;
        sh["mean"] = se.sh_mean;
        entry["sh"] = sh;
        entry["excluded_datasets"] = se.excluded_datasets;
        per_seed.push_back(std::move(entry));
    }
    root["per_seed"] = per_seed;

    ordered_json aggregate;
    for (std::size_t i = 0; i < report.aggregate.size(); ++i) {
        ordered_json stat;
        stat["mean"] = report.aggregate[i].mean;
        stat["sd"] = report.aggregate[i].sd;
        aggregate[fraction_key(report.fractions[i])] = stat;
    }
    root["aggregate"] = aggregate;

    ordered_json sh;
    sh["mean"] = report.sh.mean;
    sh["sd"] = report.sh.sd;
    sh["schedule"] = report.sh_schedule;
    root["sh"] = sh;

    root["excluded_datasets"] = report.excluded_datasets;
    root["config_hash"] = report.config_hash;
    return root.dump(2) + "\n";
}

}  // namespace

AggregateStat mean_sd(const std::vector<double>& values) {
    AggregateStat stat;
    if (values.empty()) return stat;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    stat.mean = mean;
    stat.sd = std::sqrt(var / static_cast<double>(values.size()));
    return stat;
}

std::vector<FractionEval> evaluate_model(const ImfasParams& params, const MetaDataset& test,
                                         const std::vector<double>& fractions,
                                         const SoftRankConfig& cfg,
                                         std::vector<std::string>* excluded,
                                         std::vector<std::string>* included_ids) {
    test.validate();
    if (test.num_datasets() < 1) throw ValidationError("evaluate_model: empty test set");
    if (fractions.empty()) throw SpecError("evaluate_model: need at least one fraction");
    if (test.num_meta_features() != params.dims.meta_features ||
        test.num_algorithms() != params.dims.algorithms) {
        std::ostringstream msg;
        msg << "evaluate_model: checkpoint expects F=" << params.dims.meta_features
            << ", |A|=" << params.dims.algorithms << " but data has F="
            << test.num_meta_features() << ", |A|=" << test.num_algorithms();
        throw ShapeError(msg.str());
    }

    // Datasets with degenerate (all-tied) final-fidelity ground truth cannot
    // be scored; they are excluded from every fraction and reported.
    std::vector<int> usable;
    std::vector<Vec> truth;
    for (int d = 0; d < test.num_datasets(); ++d) {
        Vec ranks = hard_rank(test.final_performances(d), RankDirection::Descending);
        const double var = (ranks.array() - ranks.mean()).square().sum();
        if (var <= 1e-12) {
            if (excluded) excluded->push_back(test.dataset_ids[d]);
            continue;
        }
        usable.push_back(d);
        truth.push_back(std::move(ranks));
    }
    if (usable.empty()) {
        throw ValidationError("evaluate_model: every test dataset has degenerate ground truth");
    }
    if (included_ids) {
        for (int d : usable) included_ids->push_back(test.dataset_ids[d]);
    }

    std::vector<FractionEval> result;
    for (double q : fractions) {
        FractionEval fe;
        fe.fraction = q;
        for (std::size_t u = 0; u < usable.size(); ++u) {
            const int d = usable[u];
            RankingPrediction pred = predict_partial(
                params, test.meta_features.row(d).transpose(), test.performances[d], q, cfg);
            const Vec pred_ranks = hard_rank(pred.scores, RankDirection::Descending);
            fe.per_dataset.push_back(spearman_eval(pred_ranks, truth[u]));
        }
        fe.mean = mean_sd(fe.per_dataset).mean;
        result.push_back(std::move(fe));
    }
    return result;
}

void aggregate_report(EvalReport& report) {
    report.aggregate.clear();
    for (std::size_t i = 0; i < report.fractions.size(); ++i) {
        std::vector<double> seed_means;
        for (const SeedEval& se : report.per_seed) seed_means.push_back(se.fractions[i].mean);
        report.aggregate.push_back(mean_sd(seed_means));
    }
    std::vector<double> sh_means;
    for (const SeedEval& se : report.per_seed) sh_means.push_back(se.sh_mean);
    report.sh = mean_sd(sh_means);

    report.excluded_datasets.clear();
    for (const SeedEval& se : report.per_seed) {
        for (const std::string& id : se.excluded_datasets) {
            report.excluded_datasets.push_back(id);
        }
    }
    std::sort(report.excluded_datasets.begin(), report.excluded_datasets.end());
    report.excluded_datasets.erase(
        std::unique(report.excluded_datasets.begin(), report.excluded_datasets.end()),
        report.excluded_datasets.end());
}

std::string render_report(const EvalReport& report, ReportFormat format) {
    if (report.aggregate.size() != report.fractions.size()) {
        throw SpecError("render_report: report is not aggregated");
    }
    return format == ReportFormat::Markdown ? render_markdown(report) : render_json(report);
}

std::string export_fraction_curve(const EvalReport& report) {
    std::ostringstream out;
    out << "fraction,mean_spearman,sd,sh_mean\n";
    for (std::size_t i = 0; i < report.fractions.size(); ++i) {
        out << format_g17(report.fractions[i]) << ',' << format_g17(report.aggregate[i].mean)
            << ',' << format_g17(report.aggregate[i].sd) << ',' << format_g17(report.sh.mean)
            << '\n';
    }
    return out.str();
}

}  // namespace imfas
