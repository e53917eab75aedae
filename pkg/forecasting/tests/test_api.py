from django.contrib.auth import get_user_model
from django.urls import reverse
from rest_framework import status
from rest_framework.test import APITestCase

from forecasting.models import ExperimentRun, RunMetric


def make_run(**overrides):
    values = {
        'kind': ExperimentRun.RunKind.TRAIN,
        'status': ExperimentRun.RunStatus.COMPLETED,
        'seed': 0,
        'config_hash': 'a' * 64,
        'config': {'window': 12},
        'output_dir': 'runs/default',
    }
    values.update(overrides)
    return ExperimentRun.objects.create(**values)


class RunAccessTests(APITestCase):
    def test_requires_authentication(self):
        response = self.client.get(reverse('run-list'))
        self.assertEqual(response.status_code, status.HTTP_403_FORBIDDEN)


class RunListTests(APITestCase):
    def setUp(self):
        self.user = get_user_model().objects.create_user(username='analyst', password='pass')
        self.client.force_authenticate(user=self.user)
        self.train = make_run(seed=1, total_flops=500)
        self.ablate = make_run(kind=ExperimentRun.RunKind.ABLATE, seed=2, total_flops=100, config_hash='b' * 64)
        self.failed = make_run(
            kind=ExperimentRun.RunKind.EXPORT, status=ExperimentRun.RunStatus.FAILED,
            gate_variant='identity', error='adjacency_path needs dataset_path to align node ids',
        )

    def test_list_runs(self):
        response = self.client.get(reverse('run-list'))
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual(response.data['count'], 3)
        first = response.data['results'][0]
        self.assertIn('kind_display', first)
        self.assertNotIn('manifest', first)

    def test_filter_by_kind_and_status(self):
        response = self.client.get(reverse('run-list'), {'kind': 'ablate'})
        self.assertEqual([item['id'] for item in response.data['results']], [self.ablate.id])
        response = self.client.get(reverse('run-list'), {'status': 'failed', 'gate_variant': 'identity'})
        self.assertEqual([item['id'] for item in response.data['results']], [self.failed.id])
        response = self.client.get(reverse('run-list'), {'config_hash': 'b' * 64})
        self.assertEqual(response.data['count'], 1)

    def test_ordering(self):
        response = self.client.get(reverse('run-list'), {'ordering': 'total_flops'})
        self.assertEqual([item['id'] for item in response.data['results']], [self.failed.id, self.ablate.id, self.train.id])

    def test_retrieve_run(self):
        RunMetric.objects.create(run=self.train, split='test', horizon=3, label='15 min', mae=2.5, mape_pct=5.0, rmse=3.0, count=12)
        response = self.client.get(reverse('run-detail', args=[self.train.id]))
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual(response.data['kind_display'], 'Train')
        self.assertEqual(response.data['config'], {'window': 12})
        self.assertEqual(len(response.data['metrics']), 1)
        self.assertIsNone(response.data['duration'])

    def test_runs_are_read_only(self):
        response = self.client.post(reverse('run-list'), {'kind': 'train'}, format='json')
        self.assertEqual(response.status_code, status.HTTP_405_METHOD_NOT_ALLOWED)
        response = self.client.delete(reverse('run-detail', args=[self.train.id]))
        self.assertEqual(response.status_code, status.HTTP_405_METHOD_NOT_ALLOWED)


class RunMetricsActionTests(APITestCase):
    def setUp(self):
        self.user = get_user_model().objects.create_user(username='analyst', password='pass')
        self.client.force_authenticate(user=self.user)
        self.run = make_run(kind=ExperimentRun.RunKind.ABLATE)
        for variant, seed in (('ones', 0), ('identity', 0), ('identity', 1)):
            for horizon in (3, 12):
                RunMetric.objects.create(
                    run=self.run, split='test', variant=variant, variant_seed=seed,
                    horizon=horizon, label=f'{horizon * 5} min', mae=float(horizon), count=10,
                )
        RunMetric.objects.create(run=self.run, split='val', variant='ones', horizon=3, label='15 min', count=0)

    def test_all_metrics(self):
        response = self.client.get(reverse('run-metrics', args=[self.run.id]))
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual(len(response.data), 7)

    def test_filter_by_split_and_variant(self):
        url = reverse('run-metrics', args=[self.run.id])
        response = self.client.get(url, {'split': 'test', 'variant': 'identity'})
        self.assertEqual(len(response.data), 4)
        self.assertEqual({item['variant_seed'] for item in response.data}, {0, 1})
        response = self.client.get(url, {'split': 'val'})
        self.assertEqual(len(response.data), 1)
        self.assertIsNone(response.data[0]['mae'])

    def test_unknown_run(self):
        response = self.client.get(reverse('run-metrics', args=[9999]))
        self.assertEqual(response.status_code, status.HTTP_404_NOT_FOUND)
