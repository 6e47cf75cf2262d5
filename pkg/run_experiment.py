from lrk.cli import cli

# python run_experiment.py run configs/star.json --out results/star

cli()
