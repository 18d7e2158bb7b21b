// Command-line front end: dataset and workload generation, benchmarking, reporting.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "mdli/mdli.hpp"

namespace {

enum ExitCode { kOk = 0, kVerificationFailed = 2, kIoError = 3, kBadArguments = 4, kFailure = 5 };

mdli::Dataset read_data(const std::string& path)
{
    const auto ext = std::filesystem::path(path).extension().string();
    return ext == ".csv" ? mdli::load_dataset_csv(path) : mdli::load_dataset(path);
}

void write_text(const std::string& path, const std::string& text)
{
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    mdli::detail::write_file(path, text);
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Multi-dimensional learned index benchmark"};
    app.require_subcommand(1);

    // gen-data
    auto* gen_data = app.add_subcommand("gen-data", "Generate a synthetic dataset or convert a CSV one");
    std::string dist = "uniform";
    std::size_t n = 1000000;
    std::size_t d = 2;
    std::uint64_t seed = 1;
    std::string out;
    std::string from_csv;
    gen_data->add_option("--dist", dist, "uniform, normal, or lognormal")
        ->check(CLI::IsMember({"uniform", "normal", "lognormal"}));
    gen_data->add_option("--n", n, "Number of points")->check(CLI::PositiveNumber);
    gen_data->add_option("--d", d, "Dimension")->check(CLI::Range(2, 64));
    gen_data->add_option("--seed", seed, "Generator seed");
    gen_data->add_option("--from-csv", from_csv, "Convert a CSV dataset instead of generating one")
        ->check(CLI::ExistingFile);
    gen_data->add_option("--out", out, "Output dataset file")->required();

    // gen-queries
    auto* gen_queries = app.add_subcommand("gen-queries", "Generate a range or kNN workload");
    std::string data_path;
    std::string mode = "range";
    std::vector<double> sels = mdli::default_selectivities();
    std::vector<std::size_t> ks = mdli::default_knn_ks();
    std::size_t count = 0;
    std::uint64_t qseed = 1;
    std::string qout;
    gen_queries->add_option("--data", data_path, "Dataset file")->required()->check(CLI::ExistingFile);
    gen_queries->add_option("--mode", mode, "range or knn")->check(CLI::IsMember({"range", "knn"}));
    gen_queries->add_option("--sel", sels, "Selectivity targets for range workloads");
    gen_queries->add_option("--k", ks, "k values for kNN workloads");
    gen_queries->add_option("--count", count, "Range queries in total, or kNN queries per k (default 100 / 20)");
    gen_queries->add_option("--seed", qseed, "Generator seed");
    gen_queries->add_option("--out", qout, "Output workload CSV")->required();

    // bench
    auto* bench = app.add_subcommand("bench", "Build indices and time them on workloads");
    std::vector<std::string> bench_data;
    std::vector<std::string> bench_queries;
    std::vector<std::string> indices = mdli::index_names();
    std::vector<std::size_t> epsilons{64};
    bool verify = false;
    bool no_build = false;
    std::size_t repeat = 1;
    std::uint64_t bench_seed = 42;
    std::string bench_out = "results.csv";
    std::string dist_name;
    bench->add_option("--data", bench_data, "Dataset files")->required()->check(CLI::ExistingFile);
    bench->add_option("--queries", bench_queries, "Workload CSV files")->check(CLI::ExistingFile);
    bench->add_option("--index", indices, "Comma-separated index names")
        ->delimiter(',')
        ->check(CLI::IsMember(mdli::index_names()));
    bench->add_option("--epsilon", epsilons, "Error bounds for the learned indices")->delimiter(',');
    bench->add_flag("--verify", verify, "Check every result against brute force");
    bench->add_flag("--no-build", no_build, "Skip construction-time records");
    bench->add_option("--repeat", repeat, "Repetitions per query")->check(CLI::PositiveNumber);
    bench->add_option("--seed", bench_seed, "Seed for randomized builds");
    bench->add_option("--dist-name", dist_name, "Dataset label in the report (default: file stem)");
    bench->add_option("--out", bench_out, "Output CSV, or - for stdout");

    // report
    auto* report = app.add_subcommand("report", "Render benchmark results");
    std::string report_in;
    std::string format = "markdown";
    std::string report_out = "-";
    report->add_option("--in", report_in, "Results CSV")->required()->check(CLI::ExistingFile);
    report->add_option("--format", format, "csv or markdown")->check(CLI::IsMember({"csv", "markdown", "md"}));
    report->add_option("--out", report_out, "Output file, or - for stdout");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen_data) {
            mdli::Dataset ds;
            if (!from_csv.empty()) {
                ds = mdli::load_dataset_csv(from_csv);
            } else {
                mdli::DatasetSpec spec;
                spec.distribution = mdli::parse_distribution(dist);
                spec.n = n;
                spec.d = d;
                spec.seed = seed;
                ds = mdli::gen_dataset(spec);
            }
            mdli::save_dataset(ds, out);
        } else if (*gen_queries) {
            const mdli::Dataset ds = read_data(data_path);
            if (mode == "range") {
                const auto w = mdli::gen_range_queries(ds, count == 0 ? 100 : count, sels, qseed);
                mdli::save_range_workload(w, qout);
            } else {
                const auto w = mdli::gen_knn_queries(ds, count == 0 ? 20 : count, ks, qseed);
                mdli::save_knn_workload(w, qout);
            }
        } else if (*bench) {
            mdli::BenchConfig cfg;
            cfg.indices = indices;
            cfg.epsilons = epsilons;
            cfg.verify = verify;
            cfg.repetitions = repeat;
            cfg.seed = bench_seed;
            for (const auto& path : bench_data) {
                const std::string label =
                    dist_name.empty() ? std::filesystem::path(path).stem().string() : dist_name;
                cfg.datasets.push_back({label, 0, read_data(path)});
            }
            for (const auto& path : bench_queries) {
                const std::string text = mdli::detail::read_file(path);
                if (mdli::workload_kind(text) == mdli::WorkloadKind::Range)
                    cfg.range_workloads.push_back(mdli::parse_range_workload(text));
                else
                    cfg.knn_workloads.push_back(mdli::parse_knn_workload(text));
            }
            std::vector<mdli::BenchRecord> records;
            if (!no_build) records = mdli::run_build_bench(cfg);
            if (!bench_queries.empty()) {
                auto q = mdli::run_query_bench(cfg);
                records.insert(records.end(), q.begin(), q.end());
            }
            write_text(bench_out, mdli::emit_report(records, mdli::ReportFormat::Csv));
        } else if (*report) {
            const auto records = mdli::parse_report_csv(mdli::detail::read_file(report_in));
            write_text(report_out, mdli::emit_report(records, mdli::parse_report_format(format)));
        }
    } catch (const mdli::VerificationError& e) {
        std::cerr << "verification failed: " << e.what() << "\n";
        return kVerificationFailed;
    } catch (const mdli::FormatError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kIoError;
    } catch (const mdli::ContractError& e) {
        std::cerr << "invalid arguments: " << e.what() << "\n";
        return kBadArguments;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
    return kOk;
}
