fn main() {
    std::process::exit(qelection::harness::main_with(std::env::args_os()));
}
