fn main() {
    std::process::exit(markov_hjb::commands::main_with_args(std::env::args_os()));
}
