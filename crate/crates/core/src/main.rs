fn main() {
    std::process::exit(topicvar::cli::run());
}
