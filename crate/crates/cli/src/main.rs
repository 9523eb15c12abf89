fn main() {
    std::process::exit(outinf::run(std::env::args_os()));
}
