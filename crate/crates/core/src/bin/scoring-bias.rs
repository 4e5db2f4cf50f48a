fn main() {
    scoring_bias::cli::main()
}
