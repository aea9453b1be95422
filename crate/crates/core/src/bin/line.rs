fn main() {
    std::process::exit(line_ood::cli::run());
}
