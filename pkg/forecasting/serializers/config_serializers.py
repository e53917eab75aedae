from fractions import Fraction

from django.utils.translation import gettext_lazy as _
from rest_framework import serializers

from ..data.panel import FORMATS
from ..network.config import GateVariant


def parse_variant_token(token):
    """
    Split an ablation token ``<gate_variant>[@<layers>][+notime]`` into
    (gate_variant, layers or None, use_time_gate).
    """
    body = token.strip()
    use_time_gate = True
    if body.endswith('+notime'):
        body = body[:-len('+notime')]
        use_time_gate = False
    layers = None
    if '@' in body:
        body, _sep, count = body.partition('@')
        if not count.isdigit() or int(count) < 1:
            raise serializers.ValidationError(f'invalid layer count in variant {token!r}')
        layers = int(count)
    if body not in GateVariant.values:
        raise serializers.ValidationError(f'unknown gate variant in {token!r}')
    return body, layers, use_time_gate


class RunConfigSerializer(serializers.Serializer):
    """
    Flat run configuration. Omitted keys take the published defaults;
    unknown keys are rejected.
    """
    # Dataset
    dataset_path = serializers.CharField(required=False, allow_blank=True, default='', help_text=_('Speed panel file'))
    dataset_format = serializers.ChoiceField(choices=FORMATS, default='csv')
    coordinates_path = serializers.CharField(required=False, allow_blank=True, default='')
    adjacency_path = serializers.CharField(required=False, allow_blank=True, default='')

    # Model
    window = serializers.IntegerField(min_value=1, default=12)
    horizon = serializers.IntegerField(min_value=1, default=12)
    embedding_dim = serializers.IntegerField(min_value=1, default=64)
    hidden_dim = serializers.IntegerField(min_value=1, default=128)
    fc_layers = serializers.IntegerField(min_value=2, default=3)
    blocks = serializers.IntegerField(min_value=1, default=2)
    layers = serializers.IntegerField(min_value=1, default=3)
    epsilon = serializers.FloatField(default=10.0)
    gate_variant = serializers.ChoiceField(choices=GateVariant.choices, default=GateVariant.LEARNABLE_PER_LAYER)
    time_of_day = serializers.BooleanField(default=True)
    day_of_week = serializers.BooleanField(default=False)
    use_time_gate = serializers.BooleanField(default=True)

    # Splits
    train_fraction = serializers.FloatField(min_value=0.0, max_value=1.0, default=0.7)
    val_fraction = serializers.FloatField(min_value=0.0, max_value=1.0, default=0.1)
    test_fraction = serializers.FloatField(min_value=0.0, max_value=1.0, default=0.2)

    # Training
    epochs = serializers.IntegerField(min_value=1, default=60)
    batches_per_epoch = serializers.IntegerField(min_value=1, default=800)
    batch_size = serializers.IntegerField(min_value=1, default=4)
    weight_decay = serializers.FloatField(min_value=0.0, default=1e-5)
    learning_rate = serializers.FloatField(min_value=0.0, default=1e-3)
    anneal_start = serializers.IntegerField(min_value=1, default=43)
    anneal_every = serializers.IntegerField(min_value=1, default=6)
    eval_batch_size = serializers.IntegerField(min_value=1, default=64)
    max_steps = serializers.IntegerField(min_value=1, required=False, allow_null=True, default=None)
    horizons = serializers.ListField(child=serializers.IntegerField(min_value=1), default=[3, 6, 12])
    seed = serializers.IntegerField(min_value=0, default=0)
    deterministic = serializers.BooleanField(default=True)

    # Outputs and ablation
    output_dir = serializers.CharField(default='runs/default')
    variants = serializers.ListField(child=serializers.CharField(), default=list)
    ablation_seeds = serializers.IntegerField(min_value=1, default=1)
    n_permutations = serializers.IntegerField(min_value=1, default=1000)
    decomposition_anchors = serializers.IntegerField(min_value=1, default=288)

    # Synthetic data
    synth_num_nodes = serializers.IntegerField(min_value=1, default=8)
    synth_num_steps = serializers.IntegerField(min_value=1, default=4032)
    synth_neighbors = serializers.IntegerField(min_value=1, default=2)
    synth_coupling = serializers.FloatField(min_value=0.0, default=0.8)
    synth_lag = serializers.IntegerField(min_value=0, default=3)
    synth_noise = serializers.FloatField(min_value=0.0, default=1.0)
    synth_event_rate = serializers.FloatField(min_value=0.0, max_value=1.0, default=0.01)
    synth_event_depth = serializers.FloatField(min_value=0.0, default=25.0)
    synth_event_decay = serializers.FloatField(min_value=0.0, default=6.0)
    synth_seasonal_amplitude = serializers.FloatField(min_value=0.0, default=15.0)

    def to_internal_value(self, data):
        if not isinstance(data, dict):
            raise serializers.ValidationError({'non_field_errors': [_('Run configuration must be a JSON object.')]})
        unknown = sorted(set(data) - set(self.fields))
        if unknown:
            raise serializers.ValidationError({key: [_('Unknown configuration key.')] for key in unknown})
        return super().to_internal_value(data)

    def validate_variants(self, value):
        for token in value:
            parse_variant_token(token)
        return value

    def validate_epsilon(self, value):
        if value != value or value in (float('inf'), float('-inf')):
            raise serializers.ValidationError(_('Epsilon must be finite.'))
        return value

    def validate(self, attrs):
        fractions = [Fraction(str(attrs[key])) for key in ('train_fraction', 'val_fraction', 'test_fraction')]
        if any(value <= 0 for value in fractions) or sum(fractions) != 1:
            raise serializers.ValidationError({'train_fraction': _('Split fractions must be positive and sum to 1.')})

        if attrs['window'] != attrs['horizon']:
            # ablation runs use each variant's own layer count, plain runs use layers
            variants = attrs.get('variants') or []
            counts = [parse_variant_token(token)[1] or attrs['layers'] for token in variants] or [attrs['layers']]
            if max(counts) > 1:
                raise serializers.ValidationError({'window': _('Stacking layers requires window == horizon.')})

        outside = [step for step in attrs['horizons'] if step > attrs['horizon']]
        if outside:
            raise serializers.ValidationError({'horizons': f'Reported horizons {outside} exceed the forecast horizon.'})

        if attrs['synth_neighbors'] >= max(attrs['synth_num_nodes'], 2):
            raise serializers.ValidationError({'synth_neighbors': _('Need fewer neighbors than nodes.')})
        if attrs['synth_event_decay'] <= 0:
            raise serializers.ValidationError({'synth_event_decay': _('Event decay must be positive.')})
        return attrs
